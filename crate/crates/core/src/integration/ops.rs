//! Rewrite operators. Each operator is a structural match on one AST node;
//! its pattern is also written as a sentential form so that select-sets and
//! preconditions live in the same language.

use super::expr::{Category, Expr};

pub struct OpDef {
    pub name: &'static str,
    pub root: Category,
    /// Precondition as a sentential form rooted at `root`.
    pub pattern: &'static str,
    /// Select-set the teacher uses for this operator.
    pub teacher: &'static str,
}

const fn op(name: &'static str, root: Category, pattern: &'static str) -> OpDef {
    OpDef {
        name,
        root,
        pattern,
        teacher: pattern,
    }
}

use Category::{Exp, PTerm, Power, Prob, Term};

pub const OPS: [OpDef; 35] = [
    op("const-out", Prob, "∫ Const * Term d Var"),
    op("split-diff", Prob, "∫ Term - Exp d Var"),
    op("split-sum", Prob, "∫ Term + Exp d Var"),
    OpDef {
        name: "parts",
        root: Prob,
        pattern: "∫ P-term * Term d Var",
        teacher: "∫ Trig * Term d Var",
    },
    OpDef {
        name: "int-power",
        root: Prob,
        pattern: "∫ ( Var ↑ Term ) d Var",
        teacher: "∫ ( Var ↑ Int ) d Var",
    },
    op("int-sin", Prob, "∫ ( sin Var ) d Var"),
    op("int-cos", Prob, "∫ ( cos Var ) d Var"),
    op("int-var", Prob, "∫ Var d Var"),
    op("int-const", Prob, "∫ Const d Var"),
    op("int-neg", Prob, "∫ ( - Term ) d Var"),
    op("d-const", Prob, "D Const Var"),
    op("d-var", Prob, "D Var Var"),
    op("d-sin", Prob, "D ( sin Var ) Var"),
    op("d-cos", Prob, "D ( cos Var ) Var"),
    op("d-power", Prob, "D ( Var ↑ Int ) Var"),
    op("d-const-mul", Prob, "D Const * Term Var"),
    op("fold-add", Exp, "Int + Int"),
    op("fold-sub", Exp, "Int - Int"),
    op("fold-mul", Term, "Int * Int"),
    op("zero-add", Exp, "0 + Exp"),
    op("add-zero", Exp, "Term + 0"),
    op("sub-zero", Exp, "Term - 0"),
    op("one-mul", Term, "1 * Term"),
    op("mul-one", Term, "P-term * 1"),
    op("zero-mul", Term, "0 * Term"),
    op("mul-zero", Term, "P-term * 0"),
    op("pow-one", Power, "( Var ↑ 1 )"),
    op("pow-zero", Power, "( Var ↑ 0 )"),
    op("neg-neg", PTerm, "( - ( - Term ) )"),
    op("neg-mul", Term, "( - Term ) * Term"),
    op("mul-neg", Term, "P-term * ( - Term )"),
    op("trig-const", Term, "Trig * Const"),
    op("trig-const-mul", Term, "Trig * Const * Term"),
    op("reassociate", Term, "( P-term * Term ) * Term"),
    op("neg-zero", PTerm, "( - 0 )"),
];

fn b(e: &Expr) -> Box<Expr> {
    Box::new(e.clone())
}

/// Applies operator `op` (1-based) to the node `e`, or `None` if its
/// precondition does not hold there.
pub fn rewrite(op: usize, e: &Expr) -> Option<Expr> {
    use Expr::*;
    let out = match (op, e) {
        (1, Integral(body)) => match &**body {
            Prod(c, t) if c.is_const() => Prod(b(c), Box::new(Integral(b(t)))),
            _ => return None,
        },
        (2, Integral(body)) => match &**body {
            Diff(l, r) => Expr::diff(Integral(b(l)), Integral(b(r))),
            _ => return None,
        },
        (3, Integral(body)) => match &**body {
            Sum(l, r) => Expr::sum(Integral(b(l)), Integral(b(r))),
            _ => return None,
        },
        (4, Integral(body)) => match &**body {
            Prod(f, g) => {
                let int_f = Integral(b(f));
                Expr::diff(
                    Prod(b(g), Box::new(int_f.clone())),
                    Expr::integral(Expr::prod(int_f, Deriv(b(g)))),
                )
            }
            _ => return None,
        },
        (5, Integral(body)) => match &**body {
            Power(n) => {
                let n1 = Expr::sum((**n).clone(), Int(1));
                Expr::quot(Expr::power(n1.clone()), n1)
            }
            _ => return None,
        },
        (6, Integral(body)) if **body == Sin => Expr::neg(Cos),
        (7, Integral(body)) if **body == Cos => Sin,
        (8, Integral(body)) if **body == X => Expr::quot(Expr::power(Int(2)), Int(2)),
        (9, Integral(body)) if body.is_const() => Expr::prod((**body).clone(), X),
        (10, Integral(body)) => match &**body {
            Neg(t) => Expr::neg(Integral(b(t))),
            _ => return None,
        },
        (11, Deriv(body)) if body.is_const() => Int(0),
        (12, Deriv(body)) if **body == X => Int(1),
        (13, Deriv(body)) if **body == Sin => Cos,
        (14, Deriv(body)) if **body == Cos => Expr::neg(Sin),
        (15, Deriv(body)) => match &**body {
            Power(n) => match &**n {
                Int(v) => Expr::prod(Int(*v), Expr::power(Expr::diff(Int(*v), Int(1)))),
                _ => return None,
            },
            _ => return None,
        },
        (16, Deriv(body)) => match &**body {
            Prod(c, t) if c.is_const() => Prod(b(c), Box::new(Deriv(b(t)))),
            _ => return None,
        },
        (17, Sum(l, r)) => match (&**l, &**r) {
            (Int(x), Int(y)) => Int(x.checked_add(*y)?),
            _ => return None,
        },
        (18, Diff(l, r)) => match (&**l, &**r) {
            (Int(x), Int(y)) if x >= y => Int(x - y),
            (Int(x), Int(y)) => Expr::neg(Int(y - x)),
            _ => return None,
        },
        (19, Prod(l, r)) => match (&**l, &**r) {
            (Int(x), Int(y)) => Int(x.checked_mul(*y)?),
            _ => return None,
        },
        (20, Sum(l, r)) if **l == Int(0) => (**r).clone(),
        (21, Sum(l, r)) if **r == Int(0) => (**l).clone(),
        (22, Diff(l, r)) if **r == Int(0) => (**l).clone(),
        (23, Prod(l, r)) if **l == Int(1) => (**r).clone(),
        (24, Prod(l, r)) if **r == Int(1) => (**l).clone(),
        (25, Prod(l, _)) if **l == Int(0) => Int(0),
        (26, Prod(_, r)) if **r == Int(0) => Int(0),
        (27, Power(n)) if **n == Int(1) => X,
        (28, Power(n)) if **n == Int(0) => Int(1),
        (29, Neg(inner)) => match &**inner {
            Neg(t) => (**t).clone(),
            _ => return None,
        },
        (30, Prod(l, r)) => match &**l {
            Neg(t) => Expr::neg(Prod(b(t), b(r))),
            _ => return None,
        },
        (31, Prod(l, r)) => match &**r {
            Neg(t) => Expr::neg(Prod(b(l), b(t))),
            _ => return None,
        },
        (32, Prod(l, r)) if l.is_trig() && r.is_const() => Prod(b(r), b(l)),
        (33, Prod(l, r)) if l.is_trig() => match &**r {
            Prod(c, t) if c.is_const() => Prod(b(c), Box::new(Prod(b(l), b(t)))),
            _ => return None,
        },
        (34, Prod(l, r)) => match &**l {
            Prod(a, m) => Prod(b(a), Box::new(Prod(b(m), b(r)))),
            _ => return None,
        },
        (35, Neg(inner)) if **inner == Int(0) => Int(0),
        _ => return None,
    };
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_representatives() {
        assert_eq!(rewrite(6, &Expr::integral(Expr::Sin)), Some(Expr::neg(Expr::Cos)));
        let e = Expr::integral(Expr::power(Expr::Int(2)));
        assert_eq!(rewrite(5, &e).unwrap().to_string(), "( x ↑ ( 2 + 1 ) ) / ( 2 + 1 )");
        let e = Expr::integral(Expr::sum(Expr::Sin, Expr::power(Expr::Int(2))));
        assert_eq!(rewrite(3, &e).unwrap().to_string(), "∫ ( sin x ) d x + ∫ ( x ↑ 2 ) d x");
        assert_eq!(rewrite(6, &Expr::integral(Expr::Cos)), None);
    }

    #[test]
    fn folding() {
        assert_eq!(rewrite(18, &Expr::diff(Expr::Int(2), Expr::Int(5))), Some(Expr::neg(Expr::Int(3))));
        assert_eq!(rewrite(17, &Expr::sum(Expr::Int(9), Expr::Int(1))), Some(Expr::Int(10)));
        assert_eq!(rewrite(19, &Expr::prod(Expr::Int(u64::MAX), Expr::Int(2))), None);
    }
}
