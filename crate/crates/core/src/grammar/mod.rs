//! Context-free grammars, parse trees and caps, most specific common caps,
//! and membership of sentences in the language of a sentential form.
//!
//! A select-set is written as a sentential form: a string of terminals and
//! nonterminals derivable from some root symbol. Generalizations of a
//! sentence under an unambiguous grammar are exactly the yields of the caps
//! of its parse tree, which is what makes the most specific generalization
//! of a set of sentences computable by intersecting parse trees from the
//! root down.

mod earley;
mod enumerate;
mod tree;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use earley::{parse, parse_from, ParseError};
pub use enumerate::{enumerate_sentences, EnumerationError, DEFAULT_ENUMERATION_LIMIT};
pub use tree::{msc, Children, MscError, Subtree, Tree, TreeBuilder};

/// Interned grammar symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(u16);

impl Sym {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Production {
    pub head: Sym,
    pub body: Vec<Sym>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("line {line}: expected `Head -> body | body ...`")]
    Syntax { line: usize },
    #[error("line {line}: empty alternative (epsilon productions are not supported)")]
    EmptyAlternative { line: usize },
    #[error("grammar has no productions")]
    Empty,
    #[error("unit productions form a cycle through {0}")]
    UnitCycle(String),
    #[error("too many symbols")]
    TooManySymbols,
}

/// A context-free grammar without epsilon productions or unit cycles.
///
/// Text format: one rule per line, `Head -> a b | c`, `#` starts a comment,
/// the first head is the start symbol, and every symbol that never appears
/// as a head is a terminal. A line `%unambiguous` records that the author
/// vouches for unambiguity.
#[derive(Clone, Debug)]
pub struct Grammar {
    names: Vec<String>,
    lookup: HashMap<String, Sym>,
    terminal: Vec<bool>,
    start: Sym,
    productions: Vec<Production>,
    by_head: Vec<Vec<usize>>,
    declared_unambiguous: bool,
}

impl Grammar {
    pub fn from_text(text: &str) -> Result<Grammar, GrammarError> {
        let mut rules: Vec<(String, Vec<Vec<String>>)> = Vec::new();
        let mut declared_unambiguous = false;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if line == "%unambiguous" {
                declared_unambiguous = true;
                continue;
            }
            let (head, rest) = line.split_once("->").ok_or(GrammarError::Syntax { line: n + 1 })?;
            let head = head.trim();
            if head.is_empty() || head.split_whitespace().count() != 1 {
                return Err(GrammarError::Syntax { line: n + 1 });
            }
            let mut alternatives = Vec::new();
            for alt in rest.split('|') {
                let body: Vec<String> = alt.split_whitespace().map(str::to_owned).collect();
                if body.is_empty() {
                    return Err(GrammarError::EmptyAlternative { line: n + 1 });
                }
                alternatives.push(body);
            }
            rules.push((head.to_owned(), alternatives));
        }
        if rules.is_empty() {
            return Err(GrammarError::Empty);
        }

        let mut g = Grammar {
            names: Vec::new(),
            lookup: HashMap::new(),
            terminal: Vec::new(),
            start: Sym(0),
            productions: Vec::new(),
            by_head: Vec::new(),
            declared_unambiguous,
        };
        for (head, _) in &rules {
            g.intern(head, false)?;
        }
        for (head, alternatives) in &rules {
            let head = g.lookup[head.as_str()];
            for body in alternatives {
                let mut syms = Vec::with_capacity(body.len());
                for name in body {
                    syms.push(g.intern(name, true)?);
                }
                g.productions.push(Production { head, body: syms });
            }
        }
        g.by_head = vec![Vec::new(); g.names.len()];
        for (i, p) in g.productions.iter().enumerate() {
            g.by_head[p.head.index()].push(i);
        }
        g.check_unit_cycles()?;
        Ok(g)
    }

    fn intern(&mut self, name: &str, terminal_if_new: bool) -> Result<Sym, GrammarError> {
        if let Some(&s) = self.lookup.get(name) {
            return Ok(s);
        }
        if self.names.len() >= u16::MAX as usize {
            return Err(GrammarError::TooManySymbols);
        }
        let s = Sym(self.names.len() as u16);
        self.names.push(name.to_owned());
        self.terminal.push(terminal_if_new);
        self.lookup.insert(name.to_owned(), s);
        Ok(s)
    }

    fn check_unit_cycles(&self) -> Result<(), GrammarError> {
        // 0 = unvisited, 1 = on stack, 2 = done
        fn visit(g: &Grammar, s: Sym, state: &mut [u8]) -> Result<(), GrammarError> {
            match state[s.index()] {
                1 => return Err(GrammarError::UnitCycle(g.name(s).to_owned())),
                2 => return Ok(()),
                _ => {}
            }
            state[s.index()] = 1;
            for &p in &g.by_head[s.index()] {
                let body = &g.productions[p].body;
                if body.len() == 1 && !g.is_terminal(body[0]) {
                    visit(g, body[0], state)?;
                }
            }
            state[s.index()] = 2;
            Ok(())
        }
        let mut state = vec![0u8; self.names.len()];
        for i in 0..self.names.len() {
            visit(self, Sym(i as u16), &mut state)?;
        }
        Ok(())
    }

    pub fn start(&self) -> Sym {
        self.start
    }

    pub fn is_declared_unambiguous(&self) -> bool {
        self.declared_unambiguous
    }

    pub fn sym(&self, name: &str) -> Option<Sym> {
        self.lookup.get(name).copied()
    }

    pub fn name(&self, s: Sym) -> &str {
        &self.names[s.index()]
    }

    pub fn is_terminal(&self, s: Sym) -> bool {
        self.terminal[s.index()]
    }

    pub fn symbol_count(&self) -> usize {
        self.names.len()
    }

    pub fn symbols(&self) -> impl Iterator<Item = Sym> + '_ {
        (0..self.names.len()).map(|i| Sym(i as u16))
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn productions_of(&self, head: Sym) -> impl Iterator<Item = &Production> + '_ {
        self.by_head[head.index()].iter().map(move |&i| &self.productions[i])
    }

    pub(crate) fn production_ids_of(&self, head: Sym) -> &[usize] {
        &self.by_head[head.index()]
    }

    /// Resolves whitespace-separated symbol names.
    pub fn symbols_from_str(&self, text: &str) -> Result<Vec<Sym>, ParseError> {
        text.split_whitespace()
            .map(|name| self.sym(name).ok_or_else(|| ParseError::UnknownSymbol(name.to_owned())))
            .collect()
    }

    pub fn render(&self, symbols: &[Sym]) -> String {
        let mut out = String::new();
        for (i, &s) in symbols.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(self.name(s));
        }
        out
    }
}

/// A string of symbols derivable from `root`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SententialForm {
    pub root: Sym,
    pub symbols: Vec<Sym>,
}

impl SententialForm {
    /// Checks derivability by parsing the form; the unique cap whose yield is
    /// the form is returned alongside it.
    pub fn parse(grammar: &Grammar, root: Sym, text: &str) -> Result<(SententialForm, Tree), ParseError> {
        let symbols = grammar.symbols_from_str(text)?;
        let cap = parse_from(grammar, root, &symbols)?;
        Ok((SententialForm { root, symbols }, cap))
    }

    pub fn of_cap(cap: Subtree<'_>) -> SententialForm {
        SententialForm {
            root: cap.label(),
            symbols: cap.yield_symbols(),
        }
    }

    pub fn display<'a>(&'a self, grammar: &'a Grammar) -> impl fmt::Display + 'a {
        DisplaySymbols {
            grammar,
            symbols: &self.symbols,
        }
    }
}

struct DisplaySymbols<'a> {
    grammar: &'a Grammar,
    symbols: &'a [Sym],
}

impl fmt::Display for DisplaySymbols<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.grammar.render(self.symbols))
    }
}

/// Most specific generalization of a nonempty set of sentences: the yield of
/// the most specific common cap of their parse trees, built incrementally.
pub fn msg(grammar: &Grammar, problems: &[Vec<Sym>]) -> Result<SententialForm, ParseError> {
    let cap = msg_cap(grammar, problems)?;
    Ok(SententialForm::of_cap(cap.view()))
}

/// Like [`msg`] but keeps the cap.
pub fn msg_cap(grammar: &Grammar, problems: &[Vec<Sym>]) -> Result<Tree, ParseError> {
    let (first, rest) = problems.split_first().ok_or(ParseError::EmptyInput)?;
    let mut cap = parse(grammar, first)?;
    for p in rest {
        let tree = parse(grammar, p)?;
        cap = msc(&[cap.view(), tree.view()]).expect("parse trees share the start symbol");
    }
    Ok(cap)
}

/// True iff `problem` is derivable from `form`.
pub fn membership(grammar: &Grammar, form: &SententialForm, problem: &[Sym]) -> bool {
    match parse_from(grammar, form.root, problem) {
        Ok(tree) => form_matches(tree.view(), &form.symbols),
        Err(_) => false,
    }
}

/// True iff `form` is the yield of some cap of `tree`.
pub fn form_matches(tree: Subtree<'_>, form: &[Sym]) -> bool {
    fn ends(node: Subtree<'_>, form: &[Sym], pos: usize, out: &mut Vec<usize>) {
        if form.get(pos) == Some(&node.label()) {
            out.push(pos + 1);
        }
        if node.is_leaf() {
            return;
        }
        let mut frontier = vec![pos];
        for child in node.children() {
            let mut next = Vec::new();
            for &p in &frontier {
                ends(child, form, p, &mut next);
            }
            next.sort_unstable();
            next.dedup();
            if next.is_empty() {
                return;
            }
            frontier = next;
        }
        out.extend(frontier);
    }
    let mut out = Vec::new();
    ends(tree, form, 0, &mut out);
    out.contains(&form.len())
}
