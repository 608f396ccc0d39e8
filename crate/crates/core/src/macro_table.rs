//! Macro tables over feature-vector domains: the table-driven solver, the
//! serial parser that reads macros off whole teacher solutions, and
//! exhaustive checks for serial decomposability and the table properties.
//!
//! Columns are ordered-feature positions `0..n` (position `i` is feature
//! `ordering[i]`), rows are feature values `0..v`.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use thiserror::Error;

use crate::framework::{replay, ApplyError, Domain, OpIndex, ReplayError, Solution, Step};

/// A domain whose states are vectors of `n` features with values in `0..v`.
pub trait FeatureDomain: Domain {
    fn feature_count(&self) -> usize;

    fn value_count(&self) -> usize;

    fn feature(&self, state: &Self::State, index: usize) -> u8;

    fn features(&self, state: &Self::State) -> FeatureState {
        FeatureState((0..self.feature_count()).map(|i| self.feature(state, i)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FeatureState(pub Vec<u8>);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error("ordering is not a permutation of 0..{0}")]
    BadOrdering(usize),
    #[error("goal has {got} features, expected {expected}")]
    GoalLength { got: usize, expected: usize },
    #[error("goal value {value} out of range 0..{v}")]
    GoalValue { value: u8, v: usize },
    #[error("macro of length {len} exceeds the limit {limit}")]
    MacroTooLong { len: usize, limit: usize },
    #[error("cell ({value}, {position}) is outside the table")]
    OutOfRange { value: usize, position: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureOrdering(Vec<usize>);

impl FeatureOrdering {
    pub fn new(order: Vec<usize>) -> Result<FeatureOrdering, TableError> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &f in &order {
            if f >= n || std::mem::replace(&mut seen[f], true) {
                return Err(TableError::BadOrdering(n));
            }
        }
        Ok(FeatureOrdering(order))
    }

    pub fn identity(n: usize) -> FeatureOrdering {
        FeatureOrdering((0..n).collect())
    }

    /// Feature taken at ordered position `i`.
    pub fn feature_at(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Macro(pub Vec<OpIndex>);

impl Macro {
    pub fn null() -> Macro {
        Macro(Vec::new())
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_null(&self) -> bool {
        self.0.is_empty()
    }

    pub fn steps(&self) -> impl Iterator<Item = Step> + '_ {
        self.0.iter().map(|&op| Step::plain(op))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cell {
    Unfilled,
    Filled(Macro),
}

pub const DEFAULT_MAX_MACRO_LEN: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MacroTable {
    values: usize,
    ordering: FeatureOrdering,
    goal: FeatureState,
    cells: Vec<Cell>,
    max_macro_len: usize,
}

impl MacroTable {
    pub fn new(values: usize, goal: FeatureState, ordering: FeatureOrdering) -> Result<MacroTable, TableError> {
        let n = ordering.len();
        if goal.0.len() != n {
            return Err(TableError::GoalLength {
                got: goal.0.len(),
                expected: n,
            });
        }
        if let Some(&value) = goal.0.iter().find(|&&g| g as usize >= values) {
            return Err(TableError::GoalValue { value, v: values });
        }
        Ok(MacroTable {
            values,
            ordering,
            goal,
            cells: vec![Cell::Unfilled; values * n],
            max_macro_len: DEFAULT_MAX_MACRO_LEN,
        })
    }

    pub fn with_max_macro_len(mut self, limit: usize) -> MacroTable {
        self.max_macro_len = limit;
        self
    }

    pub fn feature_count(&self) -> usize {
        self.ordering.len()
    }

    pub fn value_count(&self) -> usize {
        self.values
    }

    pub fn ordering(&self) -> &FeatureOrdering {
        &self.ordering
    }

    pub fn goal(&self) -> &FeatureState {
        &self.goal
    }

    /// Goal value of the feature at ordered position `i`.
    pub fn goal_at(&self, i: usize) -> u8 {
        self.goal.0[self.ordering.feature_at(i)]
    }

    fn index(&self, value: usize, position: usize) -> Result<usize, TableError> {
        if value >= self.values || position >= self.feature_count() {
            return Err(TableError::OutOfRange { value, position });
        }
        Ok(value * self.feature_count() + position)
    }

    pub fn cell(&self, value: usize, position: usize) -> &Cell {
        &self.cells[self.index(value, position).expect("cell in range")]
    }

    /// Stores `m` unless the cell is already filled; returns whether it was
    /// stored.
    pub fn insert(&mut self, value: usize, position: usize, m: Macro) -> Result<bool, TableError> {
        if m.len() > self.max_macro_len {
            return Err(TableError::MacroTooLong {
                len: m.len(),
                limit: self.max_macro_len,
            });
        }
        let at = self.index(value, position)?;
        if self.cells[at] != Cell::Unfilled {
            return Ok(false);
        }
        self.cells[at] = Cell::Filled(m);
        Ok(true)
    }

    /// Overwrites a cell unconditionally.
    pub fn replace(&mut self, value: usize, position: usize, cell: Cell) -> Result<(), TableError> {
        let at = self.index(value, position)?;
        self.cells[at] = cell;
        Ok(())
    }

    /// (value, position, macro) for every filled cell.
    pub fn filled(&self) -> impl Iterator<Item = (usize, usize, &Macro)> + '_ {
        let n = self.feature_count();
        self.cells.iter().enumerate().filter_map(move |(at, c)| match c {
            Cell::Filled(m) => Some((at / n, at % n, m)),
            Cell::Unfilled => None,
        })
    }

    pub fn filled_count(&self) -> usize {
        self.filled().count()
    }

    /// Filled cells holding a non-null macro.
    pub fn nonempty_count(&self) -> usize {
        self.filled().filter(|(_, _, m)| !m.is_null()).count()
    }

    pub fn longest_macro(&self) -> usize {
        self.filled().map(|(_, _, m)| m.len()).max().unwrap_or(0)
    }

    /// One line per value row; `-` is a null macro, `?` an unfilled cell.
    pub fn dump(&self, op_name: impl Fn(OpIndex) -> String) -> String {
        let n = self.feature_count();
        let text: Vec<String> = self
            .cells
            .iter()
            .map(|c| match c {
                Cell::Unfilled => "?".to_owned(),
                Cell::Filled(m) if m.is_null() => "-".to_owned(),
                Cell::Filled(m) => m.0.iter().map(|&op| op_name(op)).collect(),
            })
            .collect();
        let widths: Vec<usize> = (0..n)
            .map(|i| (0..self.values).map(|j| text[j * n + i].chars().count()).max().unwrap_or(1))
            .collect();
        let mut out = String::new();
        for j in 0..self.values {
            let mut line = format!("{j}:");
            for i in 0..n {
                write!(line, " {:<w$}", text[j * n + i], w = widths[i]).unwrap();
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    fn prefix_at_goal<D: FeatureDomain>(&self, domain: &D, state: &D::State, upto: usize) -> bool {
        (0..upto).all(|i| domain.feature(state, self.ordering.feature_at(i)) == self.goal_at(i))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("macro in cell ({value}, {position}) fails at its step {step}: {source}")]
pub struct TableCorrupt {
    pub value: usize,
    pub position: usize,
    pub step: usize,
    pub source: ApplyError,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MacroRun {
    pub solution: Solution,
    /// The unfilled cell that stopped the run, if any.
    pub missing: Option<(usize, usize)>,
}

/// Takes the ordered features to their goal values one at a time by the
/// macro in the cell selected by each feature's current value.
pub fn macro_solve_diagnosed<D: FeatureDomain>(
    table: &MacroTable,
    domain: &D,
    problem: &D::State,
) -> Result<MacroRun, TableCorrupt> {
    let mut state = problem.clone();
    let mut steps = Vec::new();
    for i in 0..table.feature_count() {
        let j = domain.feature(&state, table.ordering.feature_at(i)) as usize;
        let Cell::Filled(m) = table.cell(j, i) else {
            return Ok(MacroRun {
                solution: Solution::Bottom,
                missing: Some((j, i)),
            });
        };
        for (k, step) in m.steps().enumerate() {
            state = domain.apply(&state, &step).map_err(|source| TableCorrupt {
                value: j,
                position: i,
                step: k,
                source,
            })?;
            steps.push(step);
        }
    }
    let solution = if domain.is_goal(&state) {
        Solution::Steps(steps)
    } else {
        Solution::Bottom
    };
    Ok(MacroRun { solution, missing: None })
}

pub fn macro_solve<D: FeatureDomain>(table: &MacroTable, domain: &D, problem: &D::State) -> Result<Solution, TableCorrupt> {
    macro_solve_diagnosed(table, domain, problem).map(|r| r.solution)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SerialParseError {
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("solution never brings ordered features 0..={position} to their goal values")]
    Malformed { position: usize },
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Splits one solution into macros at the earliest states where successive
/// goal prefixes hold, storing each in its cell unless already filled.
/// Returns the number of cells newly filled.
pub fn serial_parse_one<D: FeatureDomain>(
    table: &mut MacroTable,
    domain: &D,
    problem: &D::State,
    solution: &Solution,
) -> Result<usize, SerialParseError> {
    let Solution::Steps(steps) = solution else {
        return Ok(0);
    };
    let trajectory = replay(domain, problem, steps)?;
    let mut p = 0;
    let mut added = 0;
    for i in 0..table.feature_count() {
        let j = domain.feature(&trajectory[p], table.ordering.feature_at(i)) as usize;
        let k = (p..trajectory.len())
            .find(|&k| table.prefix_at_goal(domain, &trajectory[k], i + 1))
            .ok_or(SerialParseError::Malformed { position: i })?;
        let m = Macro(steps[p..k].iter().map(|s| s.op).collect());
        if table.insert(j, i, m)? {
            added += 1;
        }
        p = k;
    }
    Ok(added)
}

/// Builds a table from a whole sample; bottom examples are skipped.
pub fn serial_parse<D: FeatureDomain>(
    sample: &[crate::framework::Example<D::State>],
    domain: &D,
    goal: FeatureState,
    ordering: FeatureOrdering,
) -> Result<MacroTable, SerialParseError> {
    let mut table = MacroTable::new(domain.value_count(), goal, ordering)?;
    for ex in sample {
        serial_parse_one(&mut table, domain, &ex.problem, &ex.solution)?;
    }
    Ok(table)
}

/// Two states that agree on ordered features `0..=position` but on which
/// `op` leaves feature `position` with different values (or is applicable
/// in one and not the other).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionWitness<S> {
    pub op: OpIndex,
    pub position: usize,
    pub first: S,
    pub second: S,
}

impl<S: fmt::Debug> fmt::Display for DecompositionWitness<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at ordered position {} differs between {:?} and {:?}",
            self.op, self.position, self.first, self.second
        )
    }
}

/// Checks on `states` that every operator's effect on each ordered feature
/// depends only on that feature and the features ordered before it.
pub fn check_serial_decomposability<D: FeatureDomain>(
    domain: &D,
    ordering: &FeatureOrdering,
    states: &[D::State],
) -> Result<(), DecompositionWitness<D::State>> {
    let n = ordering.len();
    for op in (0..domain.operator_count()).map(OpIndex::from_zero_based) {
        let step = Step::plain(op);
        let after: Vec<Option<D::State>> = states.iter().map(|s| domain.apply(s, &step).ok()).collect();
        for i in 0..n {
            let f = ordering.feature_at(i);
            let mut seen: HashMap<Vec<u8>, (Option<u8>, usize)> = HashMap::new();
            for (idx, s) in states.iter().enumerate() {
                let key: Vec<u8> = (0..=i).map(|q| domain.feature(s, ordering.feature_at(q))).collect();
                let effect = after[idx].as_ref().map(|t| domain.feature(t, f));
                match seen.get(&key) {
                    None => {
                        seen.insert(key, (effect, idx));
                    }
                    Some(&(e, first)) if e != effect => {
                        return Err(DecompositionWitness {
                            op,
                            position: i,
                            first: states[first].clone(),
                            second: s.clone(),
                        })
                    }
                    Some(_) => {}
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TableViolation<S> {
    /// The macro does not bring the goal prefix about from this state.
    Property { value: usize, position: usize, state: S },
    /// The macro cannot be applied from this state.
    Inapplicable { value: usize, position: usize, state: S },
    /// A strict prefix of this length already works from every state.
    Redundant { value: usize, position: usize, prefix: usize },
    /// No supplied state falls in this cell.
    Unwitnessed { value: usize, position: usize },
}

impl<S: fmt::Debug> fmt::Display for TableViolation<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableViolation::Property { value, position, state } => {
                write!(f, "cell ({value}, {position}) misses its subgoal from {state:?}")
            }
            TableViolation::Inapplicable { value, position, state } => {
                write!(f, "cell ({value}, {position}) cannot be applied from {state:?}")
            }
            TableViolation::Redundant { value, position, prefix } => {
                write!(f, "cell ({value}, {position}) is redundant: its first {prefix} moves suffice")
            }
            TableViolation::Unwitnessed { value, position } => {
                write!(f, "no state falls in cell ({value}, {position})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableReport {
    pub cells_checked: usize,
    pub applications: usize,
}

/// Checks every filled cell against every supplied state in its
/// precondition: the macro reaches the goal prefix, and no strict prefix of
/// it does so from all of them.
pub fn verify_table<D>(
    table: &MacroTable,
    domain: &D,
    states: &[D::State],
) -> Result<TableReport, TableViolation<D::State>>
where
    D: FeatureDomain + Sync,
    D::State: Send + Sync,
{
    let cells: Vec<(usize, usize, &Macro)> = table.filled().collect();
    let results: Vec<Result<usize, TableViolation<D::State>>> = cells
        .par_iter()
        .map(|&(j, i, m)| verify_cell(table, domain, states, j, i, m))
        .collect();
    let mut applications = 0;
    for r in results {
        applications += r?;
    }
    Ok(TableReport {
        cells_checked: cells.len(),
        applications,
    })
}

fn verify_cell<D: FeatureDomain>(
    table: &MacroTable,
    domain: &D,
    states: &[D::State],
    j: usize,
    i: usize,
    m: &Macro,
) -> Result<usize, TableViolation<D::State>> {
    let f = table.ordering.feature_at(i);
    // bit L set: the subgoal holds after the first L moves, for every state so far
    let mut always = u64::MAX;
    let mut count = 0;
    for s in states {
        if domain.feature(s, f) as usize != j || !table.prefix_at_goal(domain, s, i) {
            continue;
        }
        count += 1;
        let mut state = s.clone();
        let mut holds = table.prefix_at_goal(domain, &state, i + 1) as u64;
        for (k, step) in m.steps().enumerate() {
            state = domain.apply(&state, &step).map_err(|_| TableViolation::Inapplicable {
                value: j,
                position: i,
                state: s.clone(),
            })?;
            if k + 1 < 64 && table.prefix_at_goal(domain, &state, i + 1) {
                holds |= 1 << (k + 1);
            }
        }
        if !table.prefix_at_goal(domain, &state, i + 1) {
            return Err(TableViolation::Property {
                value: j,
                position: i,
                state: s.clone(),
            });
        }
        always &= holds;
    }
    if count == 0 {
        return Err(TableViolation::Unwitnessed { value: j, position: i });
    }
    let strict = always & ((1u64 << m.len().min(63)) - 1);
    if strict != 0 {
        return Err(TableViolation::Redundant {
            value: j,
            position: i,
            prefix: strict.trailing_zeros() as usize,
        });
    }
    Ok(count)
}
