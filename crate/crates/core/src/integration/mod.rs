//! Symbolic integration: expressions over the integration grammar, rewrite
//! operators applied at subexpression locations, the problem distribution
//! and a rule-driven teacher.

mod expr;
mod ops;

use std::sync::OnceLock;

use rand::Rng;
use thiserror::Error;

pub use expr::{build_tree, eval, from_tree, lex, BuiltTree, Category, Dual, Expr, ExprError, Named, Syms};
pub use ops::{rewrite, OpDef, OPS};

use crate::control_rules::{rule_solve, rule_solve_diagnosed, GrammarDomain, MatchingUnits, RuleSet, SelectSet, SolveOutcome};
use crate::framework::{ApplyError, Domain, Location, OpIndex, Solution, Step};
use crate::grammar::{parse_from, Grammar, ParseError};

pub const GRAMMAR_TEXT: &str = include_str!("integration.grammar");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReadError {
    #[error(transparent)]
    Lex(#[from] ExprError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub struct Integration {
    grammar: Grammar,
    syms: Syms,
    teacher: RuleSet,
}

impl Integration {
    pub fn new() -> Integration {
        let grammar = Grammar::from_text(GRAMMAR_TEXT).expect("built-in grammar");
        let syms = Syms::resolve(&grammar).expect("built-in grammar symbols");
        let mut teacher = RuleSet::empty(OPS.len());
        for (i, def) in OPS.iter().enumerate() {
            let root = syms.category(def.root);
            let select = SelectSet::from_form(&grammar, root, def.teacher).expect("built-in teacher form");
            teacher.set(OpIndex::from_zero_based(i), select);
        }
        Integration { grammar, syms, teacher }
    }

    /// Process-wide instance.
    pub fn shared() -> &'static Integration {
        static SHARED: OnceLock<Integration> = OnceLock::new();
        SHARED.get_or_init(Integration::new)
    }

    pub fn syms(&self) -> &Syms {
        &self.syms
    }

    pub fn teacher_rules(&self) -> &RuleSet {
        &self.teacher
    }

    pub fn teacher_solve(&self, problem: &Expr) -> Solution {
        rule_solve(&self.teacher, self, problem)
    }

    pub fn teacher_solve_diagnosed(&self, problem: &Expr) -> SolveOutcome {
        rule_solve_diagnosed(&self.teacher, self, problem)
    }

    /// Reads an expression of any category from text.
    pub fn read(&self, text: &str) -> Result<Expr, ReadError> {
        let names = lex(text)?;
        let toks = names
            .iter()
            .map(|n| self.grammar.sym(n).ok_or_else(|| ParseError::UnknownSymbol(n.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let tree = parse_from(&self.grammar, self.syms.exp, &toks)?;
        Ok(from_tree(&self.syms, &self.grammar, tree.view())?)
    }

    /// Reads a problem; it must be derivable from the start symbol.
    pub fn read_problem(&self, text: &str) -> Result<Expr, ReadError> {
        let names = lex(text)?;
        let toks = names
            .iter()
            .map(|n| self.grammar.sym(n).ok_or_else(|| ParseError::UnknownSymbol(n.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let tree = parse_from(&self.grammar, self.grammar.start(), &toks)?;
        Ok(from_tree(&self.syms, &self.grammar, tree.view())?)
    }

    pub fn apply_at(&self, op: OpIndex, e: &Expr, loc: &Location) -> Result<Expr, ApplyError> {
        if op.get() > OPS.len() {
            return Err(ApplyError::UnknownOperator(op));
        }
        let node = e.at(loc).ok_or_else(|| ApplyError::BadLocation(loc.clone()))?;
        let replacement = rewrite(op.get(), node).ok_or(ApplyError::Inapplicable(op))?;
        let mut out = e.clone();
        *out.at_mut(loc).unwrap() = replacement;
        Ok(out)
    }

    /// Some operator applies somewhere.
    pub fn any_applicable(&self, e: &Expr) -> bool {
        e.post_order().iter().any(|(_, node)| (1..=OPS.len()).any(|op| rewrite(op, node).is_some()))
    }

    /// First applicable (location, operator) in post-order, least operator
    /// first, with the operators' own preconditions as select-sets.
    pub fn post_order_step(&self, e: &Expr) -> Option<(Expr, Step)> {
        for (loc, node) in e.post_order() {
            for op in 1..=OPS.len() {
                if let Some(r) = rewrite(op, node) {
                    let mut out = e.clone();
                    *out.at_mut(&loc).unwrap() = r;
                    return Some((out, Step::at(OpIndex::new(op).unwrap(), loc)));
                }
            }
        }
        None
    }
}

impl Default for Integration {
    fn default() -> Self {
        Integration::new()
    }
}

impl Domain for Integration {
    type State = Expr;

    fn operator_count(&self) -> usize {
        OPS.len()
    }

    fn operator_name(&self, op: OpIndex) -> String {
        OPS.get(op.zero_based()).map_or_else(|| op.to_string(), |d| d.name.to_owned())
    }

    fn is_goal(&self, state: &Expr) -> bool {
        !state.contains_calculus() && !self.any_applicable(state)
    }

    fn apply(&self, state: &Expr, step: &Step) -> Result<Expr, ApplyError> {
        let loc = step.location.as_ref().ok_or(ApplyError::MissingLocation { op: step.op })?;
        self.apply_at(step.op, state, loc)
    }

    fn state_size(&self, state: &Expr) -> usize {
        state.token_len()
    }
}

impl GrammarDomain for Integration {
    fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    fn matching_units(&self, state: &Expr) -> MatchingUnits {
        let built = build_tree(&self.syms, state);
        MatchingUnits {
            tree: built.tree,
            units: built.units,
        }
    }
}

/// Choice for the three trailing coefficients: `sin x`, `cos x`, or a digit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coefficient {
    Sin,
    Cos,
    Digit(u8),
}

impl Coefficient {
    /// 0 = sin, 1 = cos, 2..=11 = digits 0..=9.
    pub fn from_index(i: u32) -> Coefficient {
        match i {
            0 => Coefficient::Sin,
            1 => Coefficient::Cos,
            d => Coefficient::Digit((d - 2) as u8),
        }
    }

    fn expr(self) -> Expr {
        match self {
            Coefficient::Sin => Expr::Sin,
            Coefficient::Cos => Expr::Cos,
            Coefficient::Digit(d) => Expr::Int(d as u64),
        }
    }
}

/// `∫ c·x^p + t2·x² + t3·x + t4 dx`
pub fn problem_from_choices(c: u8, p: u8, t: [Coefficient; 3]) -> Expr {
    let [t2, t3, t4] = t;
    Expr::integral(Expr::sum(
        Expr::prod(Expr::Int(c as u64), Expr::power(Expr::Int(p as u64))),
        Expr::sum(
            Expr::prod(t2.expr(), Expr::power(Expr::Int(2))),
            Expr::sum(Expr::prod(t3.expr(), Expr::X), t4.expr()),
        ),
    ))
}

/// Draws from the training distribution: `c` uniform in 0..=9, `p` in
/// 3..=9, each `t` uniform over sin x, cos x and the ten digits.
pub fn generate_problem<R: Rng + ?Sized>(rng: &mut R) -> Expr {
    let c = rng.gen_range(0u32..10) as u8;
    let p = rng.gen_range(3u32..10) as u8;
    let t = [(); 3].map(|_| Coefficient::from_index(rng.gen_range(0u32..12)));
    problem_from_choices(c, p, t)
}

/// Relative disagreement between the derivative of `answer` and `integrand`
/// at `x`, or `None` if either is not evaluable.
pub fn antiderivative_error(answer: &Expr, integrand: &Expr, x: f64) -> Option<f64> {
    let lhs = eval(answer, x)?.slope;
    let rhs = eval(integrand, x)?.value;
    Some((lhs - rhs).abs() / rhs.abs().max(1.0))
}

/// Formats a solution as `op@path,op@path,...` with the root path empty.
pub fn format_solution(solution: &Solution) -> String {
    match solution {
        Solution::Bottom => "⊥".to_owned(),
        Solution::Steps(steps) => steps
            .iter()
            .map(|s| format!("{}@{}", s.op.get(), s.location.as_ref().map(|l| l.to_string()).unwrap_or_default()))
            .collect::<Vec<_>>()
            .join(","),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolutionFormatError {
    #[error("bad step `{0}`")]
    BadStep(String),
}

pub fn parse_solution(text: &str) -> Result<Solution, SolutionFormatError> {
    let text = text.trim();
    if text == "⊥" {
        return Ok(Solution::Bottom);
    }
    if text.is_empty() {
        return Ok(Solution::Steps(Vec::new()));
    }
    text.split(',')
        .map(|s| {
            let bad = || SolutionFormatError::BadStep(s.to_owned());
            let (op, path) = s.split_once('@').ok_or_else(bad)?;
            let op = op.parse::<usize>().ok().and_then(OpIndex::new).ok_or_else(bad)?;
            let loc: Location = path.parse().map_err(|_| bad())?;
            Ok(Step::at(op, loc))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Solution::Steps)
}
