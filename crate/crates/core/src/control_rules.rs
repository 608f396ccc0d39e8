//! Select rules over grammar sentential forms: the rule-driven solver and
//! the learner that sets each operator's select-set to the most specific
//! generalization of the subproblems it was applied to.

use std::collections::HashSet;
use std::fmt::Write as _;

use log::debug;
use thiserror::Error;

use crate::framework::{
    is_consistent, replay, ApplyError, Domain, Example, LearnParams, Location, OpIndex, Oracle, OracleError,
    ParamError, ReplayError, Solution, Step,
};
use crate::grammar::{msc, Grammar, SententialForm, Subtree, Sym, Tree};

/// A state's parse tree together with the units select-sets are matched
/// against, in the order the solver visits them.
pub struct MatchingUnits {
    pub tree: Tree,
    /// (location, pre-order offset of the unit's root in `tree`)
    pub units: Vec<(Location, usize)>,
}

impl MatchingUnits {
    pub fn unit(&self, index: usize) -> Subtree<'_> {
        self.tree.subtree_at(self.units[index].1)
    }

    pub fn find(&self, loc: &Location) -> Option<Subtree<'_>> {
        self.units.iter().find(|(l, _)| l == loc).map(|&(_, off)| self.tree.subtree_at(off))
    }
}

/// A domain whose states are sentences of a grammar and whose operators
/// are applied at locations.
pub trait GrammarDomain: Domain {
    fn grammar(&self) -> &Grammar;

    fn matching_units(&self, state: &Self::State) -> MatchingUnits;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SelectSet {
    /// Never observed; matches nothing.
    Empty,
    /// The language of the cap's yield.
    Cap(Tree),
}

impl SelectSet {
    pub fn from_form(grammar: &Grammar, root: Sym, text: &str) -> Result<SelectSet, crate::grammar::ParseError> {
        let (_, cap) = SententialForm::parse(grammar, root, text)?;
        Ok(SelectSet::Cap(cap))
    }

    /// Membership of a unit: the cap must be a cap of the unit's parse tree.
    pub fn matches(&self, unit: Subtree<'_>) -> bool {
        match self {
            SelectSet::Empty => false,
            SelectSet::Cap(cap) => cap.view().is_cap_of(unit),
        }
    }

    pub fn root(&self) -> Option<Sym> {
        match self {
            SelectSet::Empty => None,
            SelectSet::Cap(cap) => Some(cap.view().label()),
        }
    }

    pub fn form(&self) -> Option<SententialForm> {
        match self {
            SelectSet::Empty => None,
            SelectSet::Cap(cap) => Some(SententialForm::of_cap(cap.view())),
        }
    }

    /// Generalizes to also cover `unit`.
    pub fn absorb(&mut self, unit: Subtree<'_>) -> Result<(), crate::grammar::MscError> {
        *self = match self {
            SelectSet::Empty => SelectSet::Cap(unit.to_tree()),
            SelectSet::Cap(cap) => SelectSet::Cap(msc(&[cap.view(), unit])?),
        };
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepLimit {
    Fixed(usize),
    /// Multiple of the problem's size.
    PerUnitSize(usize),
}

impl Default for StepLimit {
    fn default() -> Self {
        StepLimit::PerUnitSize(50)
    }
}

impl StepLimit {
    pub fn for_size(self, size: usize) -> usize {
        match self {
            StepLimit::Fixed(n) => n,
            StepLimit::PerUnitSize(f) => f.saturating_mul(size.max(1)),
        }
    }
}

/// One select-set per operator, in operator order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<SelectSet>,
    pub step_limit: StepLimit,
}

impl RuleSet {
    pub fn empty(operator_count: usize) -> RuleSet {
        RuleSet {
            rules: vec![SelectSet::Empty; operator_count],
            step_limit: StepLimit::default(),
        }
    }

    pub fn operator_count(&self) -> usize {
        self.rules.len()
    }

    pub fn get(&self, op: OpIndex) -> &SelectSet {
        &self.rules[op.zero_based()]
    }

    pub fn set(&mut self, op: OpIndex, select: SelectSet) {
        self.rules[op.zero_based()] = select;
    }

    pub fn iter(&self) -> impl Iterator<Item = (OpIndex, &SelectSet)> {
        self.rules.iter().enumerate().map(|(i, s)| (OpIndex::from_zero_based(i), s))
    }

    /// Least-indexed operator whose select-set contains `unit`.
    pub fn select(&self, unit: Subtree<'_>) -> Option<OpIndex> {
        self.rules
            .iter()
            .position(|s| s.root() == Some(unit.label()) && s.matches(unit))
            .map(OpIndex::from_zero_based)
    }

    /// `opN: <form>` or `opN: EMPTY`, one line per operator.
    pub fn dump(&self, grammar: &Grammar) -> String {
        let mut out = String::new();
        for (op, s) in self.iter() {
            match s.form() {
                None => writeln!(out, "{op}: EMPTY"),
                Some(f) => writeln!(out, "{op}: {}", f.display(grammar)),
            }
            .unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveFailure {
    /// No select-set contains any unit of a non-goal state.
    NoMatch { step: usize },
    /// The step budget ran out before a goal state was reached.
    StepLimit { limit: usize },
    /// A selected operator could not actually be applied.
    Inapplicable { step: usize, error: ApplyError },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOutcome {
    pub solution: Solution,
    pub failure: Option<SolveFailure>,
    /// Steps taken before a failure; empty on success.
    pub partial: Vec<Step>,
}

/// Repeatedly applies the least-indexed operator whose select-set contains
/// the first matching unit (in visiting order) that any select-set
/// contains, until a goal state is reached.
pub fn rule_solve_diagnosed<D: GrammarDomain>(rules: &RuleSet, domain: &D, problem: &D::State) -> SolveOutcome {
    let limit = rules.step_limit.for_size(domain.state_size(problem));
    let mut state = problem.clone();
    let mut steps = Vec::new();
    let fail = |failure, partial| SolveOutcome {
        solution: Solution::Bottom,
        failure: Some(failure),
        partial,
    };
    loop {
        if domain.is_goal(&state) {
            return SolveOutcome {
                solution: Solution::Steps(steps),
                failure: None,
                partial: Vec::new(),
            };
        }
        if steps.len() >= limit {
            return fail(SolveFailure::StepLimit { limit }, steps);
        }
        let mu = domain.matching_units(&state);
        let chosen = (0..mu.units.len()).find_map(|i| rules.select(mu.unit(i)).map(|op| (op, i)));
        let Some((op, i)) = chosen else {
            return fail(SolveFailure::NoMatch { step: steps.len() }, steps);
        };
        let step = Step::at(op, mu.units[i].0.clone());
        match domain.apply(&state, &step) {
            Ok(next) => state = next,
            Err(error) => {
                return fail(
                    SolveFailure::Inapplicable {
                        step: steps.len(),
                        error,
                    },
                    steps,
                )
            }
        }
        steps.push(step);
    }
}

pub fn rule_solve<D: GrammarDomain>(rules: &RuleSet, domain: &D, problem: &D::State) -> Solution {
    rule_solve_diagnosed(rules, domain, problem).solution
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CollectError {
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("step {step} has no location or its location is not a matching unit")]
    NoUnit { step: usize },
}

/// Per operator (0-based), the distinct units it was applied to.
pub fn collect_select_examples<D: GrammarDomain>(
    domain: &D,
    sample: &[Example<D::State>],
) -> Result<Vec<Vec<Tree>>, CollectError> {
    let mut sets: Vec<Vec<Tree>> = vec![Vec::new(); domain.operator_count()];
    let mut seen: Vec<HashSet<Tree>> = vec![HashSet::new(); domain.operator_count()];
    for ex in sample {
        visit_units(domain, ex, |op, unit| {
            let t = unit.to_tree();
            if seen[op.zero_based()].insert(t.clone()) {
                sets[op.zero_based()].push(t);
            }
        })?;
    }
    Ok(sets)
}

fn visit_units<D: GrammarDomain>(
    domain: &D,
    ex: &Example<D::State>,
    mut f: impl FnMut(OpIndex, Subtree<'_>),
) -> Result<(), CollectError> {
    let Solution::Steps(steps) = &ex.solution else {
        return Ok(());
    };
    let trajectory = replay(domain, &ex.problem, steps)?;
    for (i, step) in steps.iter().enumerate() {
        let mu = domain.matching_units(&trajectory[i]);
        let unit = step
            .location
            .as_ref()
            .and_then(|loc| mu.find(loc))
            .ok_or(CollectError::NoUnit { step: i })?;
        f(step.op, unit);
    }
    Ok(())
}

/// Incremental learner: select-sets are kept as most specific common caps
/// and widened one observed unit at a time.
#[derive(Clone, Debug)]
pub struct RuleLearner {
    rules: RuleSet,
    observed: usize,
}

impl RuleLearner {
    pub fn new(operator_count: usize) -> RuleLearner {
        RuleLearner {
            rules: RuleSet::empty(operator_count),
            observed: 0,
        }
    }

    pub fn observe<D: GrammarDomain>(&mut self, domain: &D, ex: &Example<D::State>) -> Result<(), CollectError> {
        let rules = &mut self.rules;
        let mut failed = None;
        visit_units(domain, ex, |op, unit| {
            if let Err(e) = rules.rules[op.zero_based()].absorb(unit) {
                failed.get_or_insert((op, e));
            }
        })?;
        // units of one operator share its root category, so widening cannot fail
        debug_assert!(failed.is_none(), "{failed:?}");
        self.observed += 1;
        Ok(())
    }

    pub fn observed(&self) -> usize {
        self.observed
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn into_rules(self) -> RuleSet {
        self.rules
    }
}

/// How many examples to draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SampleCount {
    Fixed(usize),
    /// Use the sample bound for a hypothesis space of this dimension.
    Bound { dim: f64 },
}

#[derive(Debug, Error)]
pub enum LearnError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Collect(#[from] CollectError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("learned rules disagree with the teacher on training example {0}")]
    Inconsistent(usize),
}

pub struct Learned<S> {
    pub rules: RuleSet,
    pub sample: Vec<Example<S>>,
}

/// Draws a sample from the oracle, learns select-sets, and checks that the
/// learned solver reproduces every training solution.
pub fn learn_rules<D, G, T>(
    domain: &D,
    oracle: &mut Oracle<D::State, G, T>,
    params: &LearnParams,
    count: SampleCount,
) -> Result<Learned<D::State>, LearnError>
where
    D: GrammarDomain,
    G: FnMut(&mut rand_chacha::ChaCha8Rng) -> D::State,
    T: FnMut(&D::State) -> Solution,
{
    let m = match count {
        SampleCount::Fixed(m) => m,
        SampleCount::Bound { dim } => params.sample_size(dim)? as usize,
    };
    let sample = oracle.draw(domain, m)?;
    let mut learner = RuleLearner::new(domain.operator_count());
    for ex in &sample {
        learner.observe(domain, ex)?;
    }
    let rules = learner.into_rules();
    if !is_consistent(|p| rule_solve(&rules, domain, p), &sample) {
        let bad = sample
            .iter()
            .position(|ex| !ex.solution.is_bottom() && rule_solve(&rules, domain, &ex.problem) != ex.solution)
            .unwrap_or(0);
        return Err(LearnError::Inconsistent(bad));
    }
    debug!("learned rules from {m} examples");
    Ok(Learned { rules, sample })
}
