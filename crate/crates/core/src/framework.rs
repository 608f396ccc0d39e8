//! Domains, examples, the solved-problem oracle and the PAC sample bound.
//!
//! A domain is a goal test plus a totally ordered list of partial operators.
//! Operators are numbered from 1; that numbering is the conflict-resolution
//! order used by every rule-based solver in the crate.

use std::fmt;
use std::marker::PhantomData;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// 1-based operator index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpIndex(u16);

impl OpIndex {
    pub fn new(index: usize) -> Option<OpIndex> {
        if index == 0 || index > u16::MAX as usize {
            None
        } else {
            Some(OpIndex(index as u16))
        }
    }

    pub fn from_zero_based(index: usize) -> OpIndex {
        OpIndex::new(index + 1).expect("operator index out of range")
    }

    pub fn get(self) -> usize {
        self.0 as usize
    }

    pub fn zero_based(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for OpIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "op{}", self.0)
    }
}

/// Child-index path from the root of a structured state to a subterm.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location(pub Vec<u8>);

impl Location {
    pub fn root() -> Location {
        Location(Vec::new())
    }

    pub fn child(&self, index: u8) -> Location {
        let mut path = self.0.clone();
        path.push(index);
        Location(path)
    }

    pub fn path(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Location {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Ok(Location::root());
        }
        s.split('.')
            .map(str::parse::<u8>)
            .collect::<Result<Vec<_>, _>>()
            .map(Location)
    }
}

/// One element of a solution: an operator, optionally applied at a location.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Step {
    pub op: OpIndex,
    pub location: Option<Location>,
}

impl Step {
    pub fn plain(op: OpIndex) -> Step {
        Step { op, location: None }
    }

    pub fn at(op: OpIndex, location: Location) -> Step {
        Step {
            op,
            location: Some(location),
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.location {
            Some(loc) => write!(f, "{}@{}", self.op.get(), loc),
            None => write!(f, "{}", self.op.get()),
        }
    }
}

/// What a solver or the teacher returns for a problem.
///
/// `Bottom` is the distinguished failure value; an empty `Steps` is a genuine
/// zero-length solution for a problem that is already solved.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Solution {
    Steps(Vec<Step>),
    Bottom,
}

impl Solution {
    pub fn is_bottom(&self) -> bool {
        matches!(self, Solution::Bottom)
    }

    pub fn steps(&self) -> Option<&[Step]> {
        match self {
            Solution::Steps(s) => Some(s),
            Solution::Bottom => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example<S> {
    pub problem: S,
    pub solution: Solution,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ApplyError {
    #[error("operator {0} does not exist")]
    UnknownOperator(OpIndex),
    #[error("operator {0} is not applicable")]
    Inapplicable(OpIndex),
    #[error("operator {op} needs a location")]
    MissingLocation { op: OpIndex },
    #[error("location {0} does not resolve to a subterm")]
    BadLocation(Location),
}

/// A problem domain: goal test plus ordered partial operators.
pub trait Domain {
    type State: Clone + PartialEq + fmt::Debug;

    /// Number of operators `k`; valid indices are `1..=k`.
    fn operator_count(&self) -> usize;

    fn operator_name(&self, op: OpIndex) -> String {
        op.to_string()
    }

    fn is_goal(&self, state: &Self::State) -> bool;

    fn apply(&self, state: &Self::State, step: &Step) -> Result<Self::State, ApplyError>;

    /// Size of a problem in the domain's own units (tokens, features).
    fn state_size(&self, state: &Self::State) -> usize;

    /// Abstract cost of one operator application; reported, never enforced.
    fn op_time_bound(&self) -> u64 {
        1
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("replay failed at step {step}: {source}")]
pub struct ReplayError {
    /// 0-based index into the solution.
    pub step: usize,
    pub source: ApplyError,
}

/// Applies `steps` to `problem`, returning every intermediate state
/// including the problem itself.
pub fn replay<D: Domain>(
    domain: &D,
    problem: &D::State,
    steps: &[Step],
) -> Result<Vec<D::State>, ReplayError> {
    let mut trajectory = Vec::with_capacity(steps.len() + 1);
    trajectory.push(problem.clone());
    for (i, step) in steps.iter().enumerate() {
        let next = domain
            .apply(trajectory.last().unwrap(), step)
            .map_err(|source| ReplayError { step: i, source })?;
        trajectory.push(next);
    }
    Ok(trajectory)
}

/// True iff `solver` reproduces every non-bottom solution in `sample` exactly.
pub fn is_consistent<S, F>(mut solver: F, sample: &[Example<S>]) -> bool
where
    F: FnMut(&S) -> Solution,
{
    sample.iter().all(|ex| match &ex.solution {
        Solution::Bottom => true,
        sol => &solver(&ex.problem) == sol,
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("epsilon must lie in (0, 1], got {0}")]
    Epsilon(f64),
    #[error("delta must lie in (0, 1], got {0}")]
    Delta(f64),
    #[error("dimension must be finite and nonnegative, got {0}")]
    Dimension(f64),
    #[error("{0} must be positive")]
    NotPositive(&'static str),
}

/// Number of examples that suffices for a consistent learner over a
/// hypothesis space of logarithmic dimension `dim`:
/// `ceil((dim * ln 2 + ln(1/delta)) / epsilon)`.
pub fn sample_size(epsilon: f64, delta: f64, dim: f64) -> Result<u64, ParamError> {
    if !(epsilon.is_finite() && epsilon > 0.0 && epsilon <= 1.0) {
        return Err(ParamError::Epsilon(epsilon));
    }
    if !(delta.is_finite() && delta > 0.0 && delta <= 1.0) {
        return Err(ParamError::Delta(delta));
    }
    if !(dim.is_finite() && dim >= 0.0) {
        return Err(ParamError::Dimension(dim));
    }
    let m = (dim * std::f64::consts::LN_2 + (1.0 / delta).ln()) / epsilon;
    Ok(m.ceil() as u64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnParams {
    epsilon: f64,
    delta: f64,
    max_problem_size: usize,
    max_solution_length: usize,
}

impl LearnParams {
    pub fn new(
        epsilon: f64,
        delta: f64,
        max_problem_size: usize,
        max_solution_length: usize,
    ) -> Result<LearnParams, ParamError> {
        if !(epsilon.is_finite() && epsilon > 0.0 && epsilon <= 1.0) {
            return Err(ParamError::Epsilon(epsilon));
        }
        if !(delta.is_finite() && delta > 0.0 && delta <= 1.0) {
            return Err(ParamError::Delta(delta));
        }
        if max_problem_size == 0 {
            return Err(ParamError::NotPositive("max_problem_size"));
        }
        if max_solution_length == 0 {
            return Err(ParamError::NotPositive("max_solution_length"));
        }
        Ok(LearnParams {
            epsilon,
            delta,
            max_problem_size,
            max_solution_length,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn max_problem_size(&self) -> usize {
        self.max_problem_size
    }

    pub fn max_solution_length(&self) -> usize {
        self.max_solution_length
    }

    /// Sample size for a hypothesis space of logarithmic dimension `dim`.
    pub fn sample_size(&self, dim: f64) -> Result<u64, ParamError> {
        sample_size(self.epsilon, self.delta, dim)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("teacher solution does not replay: {0}")]
    Replay(#[from] ReplayError),
    #[error("teacher solution ends in a non-goal state")]
    NotAtGoal,
    #[error("teacher solution has {len} steps, more than the limit {limit}")]
    TooLong { len: usize, limit: usize },
}

/// The solved-problem oracle: draws a problem from a seeded generator and
/// asks the teacher to solve it.
pub struct Oracle<S, G, T> {
    rng: ChaCha8Rng,
    generator: G,
    teacher: T,
    max_solution_length: Option<usize>,
    _state: PhantomData<fn() -> S>,
}

impl<S, G, T> Oracle<S, G, T>
where
    G: FnMut(&mut ChaCha8Rng) -> S,
    T: FnMut(&S) -> Solution,
{
    pub fn new(seed: u64, generator: G, teacher: T) -> Self {
        Oracle {
            rng: ChaCha8Rng::seed_from_u64(seed),
            generator,
            teacher,
            max_solution_length: None,
            _state: PhantomData,
        }
    }

    pub fn with_max_solution_length(mut self, limit: usize) -> Self {
        self.max_solution_length = Some(limit);
        self
    }

    /// Draws one example. A teacher solution that fails to replay to a goal
    /// state is an integrity error: the teacher is broken.
    pub fn solved_problem<D>(&mut self, domain: &D) -> Result<Example<S>, OracleError>
    where
        D: Domain<State = S>,
        S: Clone + PartialEq + fmt::Debug,
    {
        let problem = (self.generator)(&mut self.rng);
        let solution = (self.teacher)(&problem);
        if let Solution::Steps(steps) = &solution {
            if let Some(limit) = self.max_solution_length {
                if steps.len() > limit {
                    return Err(OracleError::TooLong {
                        len: steps.len(),
                        limit,
                    });
                }
            }
            let trajectory = replay(domain, &problem, steps)?;
            if !domain.is_goal(trajectory.last().unwrap()) {
                return Err(OracleError::NotAtGoal);
            }
        }
        Ok(Example { problem, solution })
    }

    pub fn draw<D>(&mut self, domain: &D, count: usize) -> Result<Vec<Example<S>>, OracleError>
    where
        D: Domain<State = S>,
        S: Clone + PartialEq + fmt::Debug,
    {
        (0..count).map(|_| self.solved_problem(domain)).collect()
    }

    pub fn teacher_mut(&mut self) -> &mut T {
        &mut self.teacher
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Counter domain: state is an integer, goal is 0, op1 decrements, op2
    /// increments. Decrement is partial (not below zero).
    struct Counter;

    impl Domain for Counter {
        type State = i32;
        fn operator_count(&self) -> usize {
            2
        }
        fn is_goal(&self, s: &i32) -> bool {
            *s == 0
        }
        fn apply(&self, s: &i32, step: &Step) -> Result<i32, ApplyError> {
            match step.op.get() {
                1 if *s > 0 => Ok(s - 1),
                1 => Err(ApplyError::Inapplicable(step.op)),
                2 => Ok(s + 1),
                _ => Err(ApplyError::UnknownOperator(step.op)),
            }
        }
        fn state_size(&self, _: &i32) -> usize {
            1
        }
    }

    fn dec() -> Step {
        Step::plain(OpIndex::new(1).unwrap())
    }

    #[test]
    fn bound_constants() {
        assert_eq!(sample_size(0.1, 0.1, 81.0).unwrap(), 585);
        assert_eq!(sample_size(0.1, 0.1, 35.0).unwrap(), 266);
        assert_eq!(sample_size(1.0, 1.0, 0.0).unwrap(), 0);
    }

    #[test]
    fn bound_rejects_bad_params() {
        assert!(matches!(sample_size(0.0, 0.1, 1.0), Err(ParamError::Epsilon(_))));
        assert!(matches!(sample_size(1.5, 0.1, 1.0), Err(ParamError::Epsilon(_))));
        assert!(matches!(sample_size(0.1, f64::NAN, 1.0), Err(ParamError::Delta(_))));
        assert!(matches!(sample_size(0.1, 0.1, -1.0), Err(ParamError::Dimension(_))));
        assert!(matches!(
            sample_size(0.1, 0.1, f64::INFINITY),
            Err(ParamError::Dimension(_))
        ));
    }

    #[test]
    fn bound_is_monotone_on_grid() {
        let eps = [0.05, 0.1, 0.2, 0.5, 1.0];
        let dims = [0.0, 1.0, 10.0, 35.0, 81.0, 200.0];
        for &e in &eps {
            for &d in &eps {
                for w in dims.windows(2) {
                    assert!(sample_size(e, d, w[0]).unwrap() <= sample_size(e, d, w[1]).unwrap());
                }
            }
        }
        for &dim in &dims {
            for w in eps.windows(2) {
                // w[0] < w[1], so 1/w[0] > 1/w[1]
                assert!(sample_size(w[0], 0.1, dim).unwrap() >= sample_size(w[1], 0.1, dim).unwrap());
                assert!(sample_size(0.1, w[0], dim).unwrap() >= sample_size(0.1, w[1], dim).unwrap());
            }
        }
    }

    #[test]
    fn learn_params_validation() {
        assert!(LearnParams::new(0.1, 0.1, 9, 100).is_ok());
        assert!(LearnParams::new(0.1, 0.1, 0, 100).is_err());
        assert!(LearnParams::new(0.1, 2.0, 9, 100).is_err());
        let p = LearnParams::new(0.1, 0.1, 9, 100).unwrap();
        assert_eq!(p.sample_size(81.0).unwrap(), 585);
    }

    #[test]
    fn replay_empty_and_failure() {
        assert_eq!(replay(&Counter, &3, &[]).unwrap(), vec![3]);
        assert_eq!(replay(&Counter, &2, &[dec(), dec()]).unwrap(), vec![2, 1, 0]);
        let err = replay(&Counter, &1, &[dec(), dec()]).unwrap_err();
        assert_eq!(err.step, 1);
    }

    #[test]
    fn consistency() {
        let teacher = |s: &i32| Solution::Steps(vec![dec(); *s as usize]);
        let sample: Vec<Example<i32>> = (0..5)
            .map(|s| Example {
                problem: s,
                solution: teacher(&s),
            })
            .collect();
        assert!(is_consistent(|_: &i32| Solution::Bottom, &[] as &[Example<i32>]));
        assert!(is_consistent(teacher, &sample));
        assert!(!is_consistent(|_: &i32| Solution::Bottom, &sample));
        let with_bottom = vec![Example {
            problem: 7,
            solution: Solution::Bottom,
        }];
        assert!(is_consistent(|_: &i32| Solution::Steps(vec![]), &with_bottom));
    }

    #[test]
    fn oracle_passes_bottom_and_checks_integrity() {
        use rand::Rng;
        let mut oracle = Oracle::new(7, |r: &mut ChaCha8Rng| r.gen_range(0..5), |_: &i32| Solution::Bottom);
        let ex = oracle.solved_problem(&Counter).unwrap();
        assert_eq!(ex.solution, Solution::Bottom);

        let mut broken = Oracle::new(7, |_: &mut ChaCha8Rng| 3, |_: &i32| Solution::Steps(vec![dec()]));
        assert_eq!(broken.solved_problem(&Counter), Err(OracleError::NotAtGoal));

        let mut zero = Oracle::new(7, |_: &mut ChaCha8Rng| 0, |_: &i32| Solution::Steps(vec![]));
        assert_eq!(zero.solved_problem(&Counter).unwrap().solution, Solution::Steps(vec![]));

        let mut long = Oracle::new(7, |_: &mut ChaCha8Rng| 3, |s: &i32| Solution::Steps(vec![dec(); *s as usize]))
            .with_max_solution_length(2);
        assert!(matches!(long.solved_problem(&Counter), Err(OracleError::TooLong { .. })));
    }

    #[test]
    fn oracle_streams_are_seed_deterministic() {
        use rand::Rng;
        let stream = |seed| {
            let mut o = Oracle::new(
                seed,
                |r: &mut ChaCha8Rng| r.gen_range(0..100),
                |s: &i32| Solution::Steps(vec![dec(); *s as usize]),
            );
            o.draw(&Counter, 20).unwrap()
        };
        assert_eq!(stream(11), stream(11));
        assert_ne!(stream(11), stream(12));
    }

    #[test]
    fn location_text() {
        let loc: Location = "0.1.0".parse().unwrap();
        assert_eq!(loc, Location(vec![0, 1, 0]));
        assert_eq!(loc.to_string(), "0.1.0");
        assert_eq!("".parse::<Location>().unwrap(), Location::root());
    }
}
