//! Earley recognition plus unique-derivation extraction.
//!
//! Input may contain nonterminals, in which case they are matched as leaves;
//! this is how sentential forms are turned into caps.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use super::{Grammar, Sym, Tree, TreeBuilder};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{0}` is not a terminal")]
    NotTerminal(String),
    #[error("empty input")]
    EmptyInput,
    #[error("no parse: unexpected `{found}` at position {position}")]
    Unexpected { position: usize, found: String },
    #[error("no parse: input ends early")]
    UnexpectedEnd,
    #[error("input has more than one parse tree")]
    Ambiguous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Item {
    prod: u32,
    dot: u32,
    origin: u32,
}

/// Parses a string of terminals from the start symbol.
pub fn parse(grammar: &Grammar, tokens: &[Sym]) -> Result<Tree, ParseError> {
    if let Some(&s) = tokens.iter().find(|&&s| !grammar.is_terminal(s)) {
        return Err(ParseError::NotTerminal(grammar.name(s).to_owned()));
    }
    parse_from(grammar, grammar.start(), tokens)
}

/// Parses `input` (terminals and/or nonterminals) as derived from `root`,
/// returning the unique tree whose yield is `input`.
pub fn parse_from(grammar: &Grammar, root: Sym, input: &[Sym]) -> Result<Tree, ParseError> {
    if input.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    let chart = Chart::build(grammar, root, input)?;
    let mut counter = Counter {
        chart: &chart,
        grammar,
        input,
        sym_memo: HashMap::new(),
        seq_memo: HashMap::new(),
    };
    match counter.count_sym(root, 0, input.len()) {
        0 => Err(ParseError::UnexpectedEnd),
        1 => {
            let mut out = TreeBuilder::with_capacity(input.len() * 2);
            counter.build_sym(root, 0, input.len(), &mut out);
            Ok(out.finish())
        }
        _ => Err(ParseError::Ambiguous),
    }
}

struct Chart {
    items: Vec<HashSet<Item>>,
    completed: Vec<HashSet<(usize, u32)>>,
}

impl Chart {
    fn build(grammar: &Grammar, root: Sym, input: &[Sym]) -> Result<Chart, ParseError> {
        let n = input.len();
        let prods = grammar.productions();
        let mut sets: Vec<Vec<Item>> = vec![Vec::new(); n + 1];
        let mut seen: Vec<HashSet<Item>> = vec![HashSet::new(); n + 1];
        let mut completed: Vec<HashSet<(usize, u32)>> = vec![HashSet::new(); n + 1];

        fn add(sets: &mut [Vec<Item>], seen: &mut [HashSet<Item>], k: usize, item: Item) {
            if seen[k].insert(item) {
                sets[k].push(item);
            }
        }

        for &p in grammar.production_ids_of(root) {
            add(&mut sets, &mut seen, 0, Item { prod: p as u32, dot: 0, origin: 0 });
        }
        let root_is_leaf = n == 1 && input[0] == root;

        for k in 0..=n {
            let mut i = 0;
            while i < sets[k].len() {
                let item = sets[k][i];
                i += 1;
                let prod = &prods[item.prod as usize];
                let dot = item.dot as usize;
                if dot < prod.body.len() {
                    let next = prod.body[dot];
                    let advanced = Item { dot: item.dot + 1, ..item };
                    if k < n && input[k] == next {
                        add(&mut sets, &mut seen, k + 1, advanced);
                    }
                    if !grammar.is_terminal(next) {
                        for &p in grammar.production_ids_of(next) {
                            add(&mut sets, &mut seen, k, Item { prod: p as u32, dot: 0, origin: k as u32 });
                        }
                    }
                } else {
                    let head = prod.head;
                    completed[k].insert((item.prod as usize, item.origin));
                    let origin = item.origin as usize;
                    debug_assert!(origin < k);
                    let mut j = 0;
                    while j < sets[origin].len() {
                        let waiting = sets[origin][j];
                        j += 1;
                        let wp = &prods[waiting.prod as usize];
                        if wp.body.get(waiting.dot as usize) == Some(&head) {
                            add(&mut sets, &mut seen, k, Item { dot: waiting.dot + 1, ..waiting });
                        }
                    }
                }
            }
            if k < n && sets[k + 1].is_empty() && !(root_is_leaf && k == 0) {
                return Err(ParseError::Unexpected {
                    position: k,
                    found: grammar.name(input[k]).to_owned(),
                });
            }
        }
        Ok(Chart { items: seen, completed })
    }
}

/// Counts derivations supported by the chart, saturating at 2.
struct Counter<'a> {
    chart: &'a Chart,
    grammar: &'a Grammar,
    input: &'a [Sym],
    sym_memo: HashMap<(Sym, usize, usize), u8>,
    seq_memo: HashMap<(usize, usize, usize, usize), u8>,
}

fn sat(a: u32) -> u8 {
    a.min(2) as u8
}

impl Counter<'_> {
    fn leaf_count(&self, x: Sym, i: usize, j: usize) -> u8 {
        (j == i + 1 && self.input[i] == x) as u8
    }

    fn count_sym(&mut self, x: Sym, i: usize, j: usize) -> u8 {
        if let Some(&c) = self.sym_memo.get(&(x, i, j)) {
            return c;
        }
        let mut total = self.leaf_count(x, i, j) as u32;
        if !self.grammar.is_terminal(x) {
            for &p in self.grammar.production_ids_of(x) {
                if self.chart.completed[j].contains(&(p, i as u32)) {
                    let len = self.grammar.productions()[p].body.len();
                    total += self.count_seq(p, len, i, j) as u32;
                }
                if total >= 2 {
                    break;
                }
            }
        }
        let c = sat(total);
        self.sym_memo.insert((x, i, j), c);
        c
    }

    /// Ways the first `d` body symbols of production `p` derive input[i..j].
    fn count_seq(&mut self, p: usize, d: usize, i: usize, j: usize) -> u8 {
        if d == 0 {
            return (i == j) as u8;
        }
        if j < i + d {
            return 0;
        }
        if let Some(&c) = self.seq_memo.get(&(p, d, i, j)) {
            return c;
        }
        let mut total = 0u32;
        for mid in self.splits(p, d, i, j) {
            let last = self.grammar.productions()[p].body[d - 1];
            let right = self.count_sym(last, mid, j);
            if right == 0 {
                continue;
            }
            total += right as u32 * self.count_seq(p, d - 1, i, mid) as u32;
            if total >= 2 {
                break;
            }
        }
        let c = sat(total);
        self.seq_memo.insert((p, d, i, j), c);
        c
    }

    /// Candidate positions where the (d-1)-prefix of `p` ends.
    fn splits(&self, p: usize, d: usize, i: usize, j: usize) -> Vec<usize> {
        if d == 1 {
            return vec![i];
        }
        let item = Item {
            prod: p as u32,
            dot: (d - 1) as u32,
            origin: i as u32,
        };
        (i + d - 1..j).filter(|&mid| self.chart.items[mid].contains(&item)).collect()
    }

    fn build_sym(&mut self, x: Sym, i: usize, j: usize, out: &mut TreeBuilder) {
        if self.leaf_count(x, i, j) == 1 {
            out.leaf(x);
            return;
        }
        let p = self
            .grammar
            .production_ids_of(x)
            .iter()
            .copied()
            .find(|&p| {
                self.chart.completed[j].contains(&(p, i as u32)) && {
                    let len = self.grammar.productions()[p].body.len();
                    self.count_seq(p, len, i, j) > 0
                }
            })
            .expect("counted derivation exists");
        let body = self.grammar.productions()[p].body.clone();
        let mut bounds = vec![j];
        let mut end = j;
        for d in (1..=body.len()).rev() {
            let mid = self
                .splits(p, d, i, end)
                .into_iter()
                .find(|&mid| self.count_sym(body[d - 1], mid, end) > 0 && self.count_seq(p, d - 1, i, mid) > 0)
                .expect("counted split exists");
            bounds.push(mid);
            end = mid;
        }
        bounds.reverse();
        out.open(x);
        for (k, &child) in body.iter().enumerate() {
            self.build_sym(child, bounds[k], bounds[k + 1], out);
        }
        out.close();
    }
}
