use std::fmt;

use thiserror::Error;

use crate::framework::Location;
use crate::grammar::{Grammar, Subtree, Sym, Tree, TreeBuilder};

/// Integration-language expression. The variable is always `x`, so the
/// `d x` of an integral, the differentiation variable and the base of a
/// power are implicit. Parentheses are not represented; they are emitted
/// wherever the grammar needs them.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Integral(Box<Expr>),
    Deriv(Box<Expr>),
    Sum(Box<Expr>, Box<Expr>),
    Diff(Box<Expr>, Box<Expr>),
    Prod(Box<Expr>, Box<Expr>),
    Quot(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    /// `x ↑ exponent`
    Power(Box<Expr>),
    Sin,
    Cos,
    Int(u64),
    Named(Named),
    X,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Named {
    A,
    K,
}

/// Phrase nonterminal an AST node kind is rooted at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Category {
    Prob,
    Exp,
    Term,
    PTerm,
    Power,
    Trig,
    Const,
    Int,
    Var,
}

impl Category {
    pub fn symbol_name(self) -> &'static str {
        match self {
            Category::Prob => "Prob",
            Category::Exp => "Exp",
            Category::Term => "Term",
            Category::PTerm => "P-term",
            Category::Power => "Power",
            Category::Trig => "Trig",
            Category::Const => "Const",
            Category::Int => "Int",
            Category::Var => "Var",
        }
    }
}

macro_rules! boxed {
    ($($name:ident => $variant:ident),* $(,)?) => {
        $(pub fn $name(a: Expr) -> Expr { Expr::$variant(Box::new(a)) })*
    };
}

macro_rules! boxed2 {
    ($($name:ident => $variant:ident),* $(,)?) => {
        $(pub fn $name(a: Expr, b: Expr) -> Expr { Expr::$variant(Box::new(a), Box::new(b)) })*
    };
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    boxed!(integral => Integral, deriv => Deriv, neg => Neg, power => Power);
    boxed2!(sum => Sum, diff => Diff, prod => Prod, quot => Quot);

    pub fn category(&self) -> Category {
        match self {
            Expr::Integral(_) | Expr::Deriv(_) => Category::Prob,
            Expr::Sum(..) | Expr::Diff(..) => Category::Exp,
            Expr::Prod(..) | Expr::Quot(..) => Category::Term,
            Expr::Neg(_) => Category::PTerm,
            Expr::Power(_) => Category::Power,
            Expr::Sin | Expr::Cos => Category::Trig,
            Expr::Int(_) => Category::Int,
            Expr::Named(_) => Category::Const,
            Expr::X => Category::Var,
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Expr::Int(_) | Expr::Named(_))
    }

    pub fn is_trig(&self) -> bool {
        matches!(self, Expr::Sin | Expr::Cos)
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Integral(a) | Expr::Deriv(a) | Expr::Neg(a) | Expr::Power(a) => vec![a],
            Expr::Sum(a, b) | Expr::Diff(a, b) | Expr::Prod(a, b) | Expr::Quot(a, b) => vec![a, b],
            _ => Vec::new(),
        }
    }

    fn child_mut(&mut self, i: u8) -> Option<&mut Expr> {
        match (self, i) {
            (Expr::Integral(a) | Expr::Deriv(a) | Expr::Neg(a) | Expr::Power(a), 0) => Some(a),
            (Expr::Sum(a, _) | Expr::Diff(a, _) | Expr::Prod(a, _) | Expr::Quot(a, _), 0) => Some(a),
            (Expr::Sum(_, b) | Expr::Diff(_, b) | Expr::Prod(_, b) | Expr::Quot(_, b), 1) => Some(b),
            _ => None,
        }
    }

    pub fn at(&self, loc: &Location) -> Option<&Expr> {
        let mut e = self;
        for &i in loc.path() {
            e = *e.children().get(i as usize)?;
        }
        Some(e)
    }

    pub fn at_mut(&mut self, loc: &Location) -> Option<&mut Expr> {
        let mut e = self;
        for &i in loc.path() {
            e = e.child_mut(i)?;
        }
        Some(e)
    }

    pub fn contains_calculus(&self) -> bool {
        matches!(self, Expr::Integral(_) | Expr::Deriv(_)) || self.children().iter().any(|c| c.contains_calculus())
    }

    /// Every node with its location, children before parents, left to right.
    pub fn post_order(&self) -> Vec<(Location, &Expr)> {
        fn go<'a>(e: &'a Expr, path: &mut Vec<u8>, out: &mut Vec<(Location, &'a Expr)>) {
            for (i, c) in e.children().into_iter().enumerate() {
                path.push(i as u8);
                go(c, path, out);
                path.pop();
            }
            out.push((Location(path.clone()), e));
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    fn walk(&self, out: &mut impl FnMut(Piece)) {
        self.walk_exp(out)
    }

    fn walk_exp(&self, out: &mut impl FnMut(Piece)) {
        match self {
            Expr::Sum(a, b) | Expr::Diff(a, b) => {
                a.walk_term(out);
                out(Piece::Tok(if matches!(self, Expr::Sum(..)) { "+" } else { "-" }));
                b.walk_exp(out);
            }
            _ => self.walk_term(out),
        }
    }

    fn walk_term(&self, out: &mut impl FnMut(Piece)) {
        match self {
            Expr::Prod(a, b) | Expr::Quot(a, b) => {
                a.walk_pterm(out);
                out(Piece::Tok(if matches!(self, Expr::Prod(..)) { "*" } else { "/" }));
                b.walk_term(out);
            }
            _ => self.walk_pterm(out),
        }
    }

    fn walk_pterm(&self, out: &mut impl FnMut(Piece)) {
        let toks = |ts: &[&'static str], out: &mut dyn FnMut(Piece)| {
            for &t in ts {
                out(Piece::Tok(t));
            }
        };
        match self {
            Expr::Integral(a) => {
                out(Piece::Tok("∫"));
                a.walk_exp(out);
                toks(&["d", "x"], out);
            }
            Expr::Deriv(a) => {
                out(Piece::Tok("D"));
                a.walk_exp(out);
                out(Piece::Tok("x"));
            }
            Expr::Neg(a) => {
                toks(&["(", "-"], out);
                a.walk_term(out);
                out(Piece::Tok(")"));
            }
            Expr::Power(a) => {
                toks(&["(", "x", "↑"], out);
                a.walk_term(out);
                out(Piece::Tok(")"));
            }
            Expr::Sin => toks(&["(", "sin", "x", ")"], out),
            Expr::Cos => toks(&["(", "cos", "x", ")"], out),
            Expr::Int(n) => out(Piece::Num(*n)),
            Expr::Named(Named::A) => out(Piece::Tok("a")),
            Expr::Named(Named::K) => out(Piece::Tok("k")),
            Expr::X => out(Piece::Tok("x")),
            Expr::Sum(..) | Expr::Diff(..) | Expr::Prod(..) | Expr::Quot(..) => {
                out(Piece::Tok("("));
                self.walk_exp(out);
                out(Piece::Tok(")"));
            }
        }
    }

    /// Token names, one per grammar terminal (integers digit by digit).
    pub fn tokens(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        self.walk(&mut |p| match p {
            Piece::Tok(t) => out.push(t),
            Piece::Num(n) => out.extend(n.to_string().bytes().map(|b| DIGITS[(b - b'0') as usize])),
        });
        out
    }

    pub fn token_len(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |p| {
            n += match p {
                Piece::Tok(_) => 1,
                Piece::Num(v) => v.to_string().len(),
            }
        });
        n
    }
}

const DIGITS: [&str; 10] = ["0", "1", "2", "3", "4", "5", "6", "7", "8", "9"];

enum Piece {
    Tok(&'static str),
    Num(u64),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut result = Ok(());
        self.walk(&mut |p| {
            if result.is_err() {
                return;
            }
            if !first {
                result = f.write_str(" ");
            }
            first = false;
            result = result.and_then(|_| match p {
                Piece::Tok(t) => f.write_str(t),
                Piece::Num(n) => write!(f, "{n}"),
            });
        });
        result
    }
}

/// Grammar symbols the integration domain refers to directly.
#[derive(Clone, Debug)]
pub struct Syms {
    pub prob: Sym,
    pub exp: Sym,
    pub term: Sym,
    pub pterm: Sym,
    pub power: Sym,
    pub trig: Sym,
    pub konst: Sym,
    pub int: Sym,
    pub numeral: Sym,
    pub digit: Sym,
    pub var: Sym,
    pub integral: Sym,
    pub d: Sym,
    pub deriv: Sym,
    pub plus: Sym,
    pub minus: Sym,
    pub times: Sym,
    pub slash: Sym,
    pub lparen: Sym,
    pub rparen: Sym,
    pub up: Sym,
    pub sin: Sym,
    pub cos: Sym,
    pub x: Sym,
    pub a: Sym,
    pub k: Sym,
    pub digits: [Sym; 10],
}

impl Syms {
    pub fn resolve(g: &Grammar) -> Option<Syms> {
        let s = |n: &str| g.sym(n);
        let mut digits = [s("0")?; 10];
        for (i, d) in digits.iter_mut().enumerate() {
            *d = s(DIGITS[i])?;
        }
        Some(Syms {
            prob: s("Prob")?,
            exp: s("Exp")?,
            term: s("Term")?,
            pterm: s("P-term")?,
            power: s("Power")?,
            trig: s("Trig")?,
            konst: s("Const")?,
            int: s("Int")?,
            numeral: s("Numeral")?,
            digit: s("Digit")?,
            var: s("Var")?,
            integral: s("∫")?,
            d: s("d")?,
            deriv: s("D")?,
            plus: s("+")?,
            minus: s("-")?,
            times: s("*")?,
            slash: s("/")?,
            lparen: s("(")?,
            rparen: s(")")?,
            up: s("↑")?,
            sin: s("sin")?,
            cos: s("cos")?,
            x: s("x")?,
            a: s("a")?,
            k: s("k")?,
            digits,
        })
    }

    pub fn category(&self, c: Category) -> Sym {
        match c {
            Category::Prob => self.prob,
            Category::Exp => self.exp,
            Category::Term => self.term,
            Category::PTerm => self.pterm,
            Category::Power => self.power,
            Category::Trig => self.trig,
            Category::Const => self.konst,
            Category::Int => self.int,
            Category::Var => self.var,
        }
    }

    pub fn to_syms(&self, e: &Expr) -> Vec<Sym> {
        let mut out = Vec::new();
        e.walk(&mut |p| match p {
            Piece::Tok(t) => out.push(self.terminal(t)),
            Piece::Num(n) => out.extend(n.to_string().bytes().map(|b| self.digits[(b - b'0') as usize])),
        });
        out
    }

    fn terminal(&self, t: &str) -> Sym {
        match t {
            "∫" => self.integral,
            "d" => self.d,
            "D" => self.deriv,
            "+" => self.plus,
            "-" => self.minus,
            "*" => self.times,
            "/" => self.slash,
            "(" => self.lparen,
            ")" => self.rparen,
            "↑" => self.up,
            "sin" => self.sin,
            "cos" => self.cos,
            "x" => self.x,
            "a" => self.a,
            "k" => self.k,
            _ => unreachable!("unknown token {t}"),
        }
    }
}

/// Parse tree of an expression (rooted at `Exp`) plus, in post-order, the
/// pre-order offset of each AST node's category node.
pub struct BuiltTree {
    pub tree: Tree,
    pub units: Vec<(Location, usize)>,
}

pub fn build_tree(syms: &Syms, e: &Expr) -> BuiltTree {
    let mut b = Builder {
        s: syms,
        out: TreeBuilder::with_capacity(e.token_len() * 3),
        path: Vec::new(),
        units: Vec::new(),
    };
    b.exp(e);
    BuiltTree {
        tree: b.out.finish(),
        units: b.units,
    }
}

struct Builder<'a> {
    s: &'a Syms,
    out: TreeBuilder,
    path: Vec<u8>,
    units: Vec<(Location, usize)>,
}

impl Builder<'_> {
    fn child(&mut self, i: u8, f: impl FnOnce(&mut Self)) {
        self.path.push(i);
        f(self);
        self.path.pop();
    }

    fn record(&mut self, offset: usize) {
        self.units.push((Location(self.path.clone()), offset));
    }

    fn exp(&mut self, e: &Expr) {
        let at = self.out.open(self.s.exp);
        match e {
            Expr::Sum(a, b) | Expr::Diff(a, b) => {
                self.child(0, |me| me.term(a));
                self.out.leaf(if matches!(e, Expr::Sum(..)) { self.s.plus } else { self.s.minus });
                self.child(1, |me| me.exp(b));
                self.record(at);
            }
            _ => self.term(e),
        }
        self.out.close();
    }

    fn term(&mut self, e: &Expr) {
        let at = self.out.open(self.s.term);
        match e {
            Expr::Prod(a, b) | Expr::Quot(a, b) => {
                self.child(0, |me| me.pterm(a));
                self.out.leaf(if matches!(e, Expr::Prod(..)) { self.s.times } else { self.s.slash });
                self.child(1, |me| me.term(b));
                self.record(at);
            }
            _ => self.pterm(e),
        }
        self.out.close();
    }

    fn leaves(&mut self, syms: &[Sym]) {
        for &s in syms {
            self.out.leaf(s);
        }
    }

    fn var(&mut self) {
        self.out.open(self.s.var);
        self.out.leaf(self.s.x);
        self.out.close();
    }

    fn pterm(&mut self, e: &Expr) {
        let s = self.s;
        let at = self.out.open(s.pterm);
        match e {
            Expr::Int(n) => {
                self.out.open(s.konst);
                let at = self.out.open(s.int);
                self.int(*n);
                self.out.close();
                self.record(at);
                self.out.close();
            }
            Expr::Named(n) => {
                let at = self.out.open(s.konst);
                self.out.leaf(if *n == Named::A { s.a } else { s.k });
                self.out.close();
                self.record(at);
            }
            Expr::X => {
                let at = self.out.offset();
                self.var();
                self.record(at);
            }
            Expr::Neg(a) => {
                self.leaves(&[s.lparen, s.minus]);
                self.child(0, |me| me.term(a));
                self.out.leaf(s.rparen);
                self.record(at);
            }
            Expr::Sin | Expr::Cos => {
                let at = self.out.open(s.trig);
                self.leaves(&[s.lparen, if *e == Expr::Sin { s.sin } else { s.cos }]);
                self.var();
                self.out.leaf(s.rparen);
                self.out.close();
                self.record(at);
            }
            Expr::Power(a) => {
                let at = self.out.open(s.power);
                self.out.leaf(s.lparen);
                self.var();
                self.out.leaf(s.up);
                self.child(0, |me| me.term(a));
                self.out.leaf(s.rparen);
                self.out.close();
                self.record(at);
            }
            Expr::Integral(a) => {
                let at = self.out.open(s.prob);
                self.out.leaf(s.integral);
                self.child(0, |me| me.exp(a));
                self.out.leaf(s.d);
                self.var();
                self.out.close();
                self.record(at);
            }
            Expr::Deriv(a) => {
                let at = self.out.open(s.prob);
                self.out.leaf(s.deriv);
                self.child(0, |me| me.exp(a));
                self.var();
                self.out.close();
                self.record(at);
            }
            Expr::Sum(..) | Expr::Diff(..) | Expr::Prod(..) | Expr::Quot(..) => {
                self.out.leaf(s.lparen);
                self.exp(e);
                self.out.leaf(s.rparen);
            }
        }
        self.out.close();
    }

    /// Children of an `Int` node.
    fn int(&mut self, n: u64) {
        let digits: Vec<usize> = n.to_string().bytes().map(|b| (b - b'0') as usize).collect();
        if digits.len() == 1 {
            self.out.leaf(self.s.digits[digits[0]]);
            return;
        }
        let opened = digits.len() - 1;
        for (i, &d) in digits.iter().enumerate() {
            if i + 1 < digits.len() {
                self.out.open(self.s.numeral);
            }
            if i + 2 == digits.len() {
                // Numeral -> Digit Digit closes the chain
                self.digit(d);
                self.digit(digits[i + 1]);
                break;
            }
            self.digit(d);
        }
        for _ in 0..opened {
            self.out.close();
        }
    }

    fn digit(&mut self, d: usize) {
        self.out.open(self.s.digit);
        self.out.leaf(self.s.digits[d]);
        self.out.close();
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("unexpected character `{0}`")]
    BadChar(char),
    #[error("unknown word `{0}`")]
    BadWord(String),
    #[error("tree does not describe a complete expression at `{0}`")]
    Incomplete(String),
    #[error("integer literal too large")]
    Overflow,
}

/// Splits text into token names: digits one per token, `^` as `↑`, `sin`
/// and `cos` whole, any other run of letters letter by letter.
pub fn lex(text: &str) -> Result<Vec<String>, ExprError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            c if c.is_whitespace() => {}
            '^' => out.push("↑".to_owned()),
            '∫' | '↑' | '+' | '-' | '*' | '/' | '(' | ')' => out.push(c.to_string()),
            '0'..='9' => out.push(c.to_string()),
            c if c.is_ascii_alphabetic() => {
                let mut word = c.to_string();
                while let Some(&n) = chars.peek() {
                    if !n.is_ascii_alphabetic() {
                        break;
                    }
                    word.push(n);
                    chars.next();
                }
                let mut rest = word.as_str();
                while !rest.is_empty() {
                    if let Some(r) = rest.strip_prefix("sin").or_else(|| rest.strip_prefix("cos")) {
                        out.push(rest[..3].to_owned());
                        rest = r;
                    } else {
                        let ch = &rest[..1];
                        if !matches!(ch, "x" | "d" | "D" | "a" | "k") {
                            return Err(ExprError::BadWord(word.clone()));
                        }
                        out.push(ch.to_owned());
                        rest = &rest[1..];
                    }
                }
            }
            other => return Err(ExprError::BadChar(other)),
        }
    }
    Ok(out)
}

/// Reads an expression back from its parse tree (any category root).
pub fn from_tree(s: &Syms, g: &Grammar, t: Subtree<'_>) -> Result<Expr, ExprError> {
    let bad = || ExprError::Incomplete(g.render(&t.yield_symbols()));
    let kids: Vec<Subtree<'_>> = t.children().collect();
    let label = t.label();
    let rec = |c: Subtree<'_>| from_tree(s, g, c);
    if kids.is_empty() {
        return match label {
            l if l == s.x => Ok(Expr::X),
            _ => Err(bad()),
        };
    }
    let labels: Vec<Sym> = kids.iter().map(|k| k.label()).collect();
    if label == s.exp || label == s.term {
        return match labels.len() {
            1 => rec(kids[0]),
            3 => {
                let (a, b) = (Box::new(rec(kids[0])?), Box::new(rec(kids[2])?));
                Ok(match labels[1] {
                    l if l == s.plus => Expr::Sum(a, b),
                    l if l == s.minus => Expr::Diff(a, b),
                    l if l == s.times => Expr::Prod(a, b),
                    l if l == s.slash => Expr::Quot(a, b),
                    _ => return Err(bad()),
                })
            }
            _ => Err(bad()),
        };
    }
    if label == s.pterm {
        return match labels.len() {
            1 => rec(kids[0]),
            3 => rec(kids[1]),
            4 if labels[1] == s.minus => Ok(Expr::neg(rec(kids[2])?)),
            _ => Err(bad()),
        };
    }
    if label == s.prob {
        return match labels[0] {
            l if l == s.integral => Ok(Expr::integral(rec(kids[1])?)),
            l if l == s.deriv => Ok(Expr::deriv(rec(kids[1])?)),
            _ => Err(bad()),
        };
    }
    if label == s.power {
        return Ok(Expr::power(rec(kids[3])?));
    }
    if label == s.trig {
        return Ok(if labels[1] == s.sin { Expr::Sin } else { Expr::Cos });
    }
    if label == s.var {
        return Ok(Expr::X);
    }
    if label == s.konst {
        return match labels[0] {
            l if l == s.a => Ok(Expr::Named(Named::A)),
            l if l == s.k => Ok(Expr::Named(Named::K)),
            _ => rec(kids[0]),
        };
    }
    if label == s.int || label == s.numeral || label == s.digit {
        let mut n: u64 = 0;
        for leaf in t.yield_symbols() {
            let d = s.digits.iter().position(|&x| x == leaf).ok_or_else(bad)? as u64;
            n = n.checked_mul(10).and_then(|n| n.checked_add(d)).ok_or(ExprError::Overflow)?;
        }
        return Ok(Expr::Int(n));
    }
    Err(bad())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub slope: f64,
}

const NAMED_A: f64 = 1.7;
const NAMED_K: f64 = 0.3;

/// Value and derivative at `x` of a calculus-free expression. Named
/// constants get fixed arbitrary values. `None` if an integral or
/// derivative remains.
pub fn eval(e: &Expr, x: f64) -> Option<Dual> {
    let d = |value, slope| Some(Dual { value, slope });
    match e {
        Expr::Integral(_) | Expr::Deriv(_) => None,
        Expr::X => d(x, 1.0),
        Expr::Int(n) => d(*n as f64, 0.0),
        Expr::Named(Named::A) => d(NAMED_A, 0.0),
        Expr::Named(Named::K) => d(NAMED_K, 0.0),
        Expr::Sin => d(x.sin(), x.cos()),
        Expr::Cos => d(x.cos(), -x.sin()),
        Expr::Neg(a) => {
            let a = eval(a, x)?;
            d(-a.value, -a.slope)
        }
        Expr::Power(p) => {
            let p = eval(p, x)?;
            let v = x.powf(p.value);
            d(v, v * (p.slope * x.ln() + p.value / x))
        }
        Expr::Sum(a, b) | Expr::Diff(a, b) | Expr::Prod(a, b) | Expr::Quot(a, b) => {
            let (a, b) = (eval(a, x)?, eval(b, x)?);
            match e {
                Expr::Sum(..) => d(a.value + b.value, a.slope + b.slope),
                Expr::Diff(..) => d(a.value - b.value, a.slope - b.slope),
                Expr::Prod(..) => d(a.value * b.value, a.slope * b.value + a.value * b.slope),
                _ => d(a.value / b.value, (a.slope * b.value - a.value * b.slope) / (b.value * b.value)),
            }
        }
    }
}
