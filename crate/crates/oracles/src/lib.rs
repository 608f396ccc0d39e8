//! Slow, obviously-correct reference implementations that the library's
//! fast paths are checked against. Nothing here is used outside tests.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::Rng;

use speedup_core::eight_puzzle::{Board, Move};
use speedup_core::grammar::{Grammar, Subtree, Sym, Tree, TreeBuilder};
use speedup_core::integration::{eval, Expr};
use speedup_core::macro_table::FeatureOrdering;

/// Plain nested tree, independent of the flat pre-order layout.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Nested {
    pub label: Sym,
    pub kids: Vec<Nested>,
}

impl Nested {
    pub fn of(t: Subtree<'_>) -> Nested {
        Nested {
            label: t.label(),
            kids: t.children().map(Nested::of).collect(),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.kids.iter().map(Nested::size).sum::<usize>()
    }

    pub fn to_tree(&self) -> Tree {
        fn go(n: &Nested, b: &mut TreeBuilder) {
            if n.kids.is_empty() {
                b.leaf(n.label);
            } else {
                b.open(n.label);
                n.kids.iter().for_each(|k| go(k, b));
                b.close();
            }
        }
        let mut b = TreeBuilder::new();
        go(self, &mut b);
        b.finish()
    }
}

/// Every cap of `t`: each node is either cut to a leaf or keeps all its
/// children.
pub fn all_caps(t: &Nested) -> Vec<Nested> {
    let mut out = vec![Nested {
        label: t.label,
        kids: Vec::new(),
    }];
    if t.kids.is_empty() {
        return out;
    }
    let mut combos: Vec<Vec<Nested>> = vec![Vec::new()];
    for k in &t.kids {
        let caps = all_caps(k);
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                caps.iter().map(move |c| {
                    let mut p = prefix.clone();
                    p.push(c.clone());
                    p
                })
            })
            .collect();
    }
    out.extend(combos.into_iter().map(|kids| Nested { label: t.label, kids }));
    out
}

pub fn is_cap(cap: &Nested, t: &Nested) -> bool {
    cap.label == t.label
        && (cap.kids.is_empty()
            || (cap.kids.len() == t.kids.len() && cap.kids.iter().zip(&t.kids).all(|(c, k)| is_cap(c, k))))
}

/// Largest tree that is a cap of every input, by enumerating the caps of
/// the first. `None` when the roots differ.
pub fn brute_msc(trees: &[Nested]) -> Option<Nested> {
    let (first, rest) = trees.split_first()?;
    all_caps(first)
        .into_iter()
        .filter(|c| rest.iter().all(|t| is_cap(c, t)))
        .max_by_key(Nested::size)
}

/// Small random tree over `labels`, depth at most `depth`.
pub fn random_tree<R: Rng>(rng: &mut R, labels: &[Sym], depth: usize) -> Nested {
    let label = labels[rng.gen_range(0..labels.len())];
    let arity = if depth == 0 { 0 } else { rng.gen_range(0..=2) };
    Nested {
        label,
        kids: (0..arity).map(|_| random_tree(rng, labels, depth - 1)).collect(),
    }
}

/// A random variant of `t`: some subtrees are replaced by fresh ones.
pub fn mutate<R: Rng>(rng: &mut R, t: &Nested, labels: &[Sym], depth: usize) -> Nested {
    if depth > 0 && rng.gen_bool(0.2) {
        let mut fresh = random_tree(rng, labels, depth);
        fresh.label = t.label;
        return fresh;
    }
    Nested {
        label: t.label,
        kids: t.kids.iter().map(|k| mutate(rng, k, labels, depth.saturating_sub(1))).collect(),
    }
}

/// A sentential form reached by `steps` random leftmost expansions from
/// the start symbol, kept no longer than `max_len`.
pub fn random_form<R: Rng>(rng: &mut R, g: &Grammar, steps: usize, max_len: usize) -> Vec<Sym> {
    let mut form = vec![g.start()];
    for _ in 0..steps {
        let nts: Vec<usize> = (0..form.len()).filter(|&i| !g.is_terminal(form[i])).collect();
        if nts.is_empty() {
            break;
        }
        let at = nts[rng.gen_range(0..nts.len())];
        let prods: Vec<_> = g.productions_of(form[at]).collect();
        let p = prods[rng.gen_range(0..prods.len())];
        if form.len() - 1 + p.body.len() > max_len {
            continue;
        }
        form.splice(at..=at, p.body.iter().copied());
    }
    form
}

/// Number of boards reachable from the goal, by breadth-first search over
/// a row-major 3x3 grid with its own adjacency.
pub fn count_reachable_boards() -> usize {
    let start: [u8; 9] = [1, 2, 3, 8, 0, 4, 7, 6, 5];
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let z = s.iter().position(|&t| t == 0).unwrap();
        let (r, c) = (z / 3, z % 3);
        let mut nbrs = Vec::new();
        if r > 0 {
            nbrs.push(z - 3);
        }
        if r < 2 {
            nbrs.push(z + 3);
        }
        if c > 0 {
            nbrs.push(z - 1);
        }
        if c < 2 {
            nbrs.push(z + 1);
        }
        for n in nbrs {
            let mut t = s;
            t.swap(z, n);
            if seen.insert(t) {
                queue.push_back(t);
            }
        }
    }
    seen.len()
}

/// Length of a shortest move sequence bringing the tiles at ordered
/// positions `0..=upto` home, by unpruned breadth-first search.
pub fn bfs_subgoal_len(b: &Board, ordering: &FeatureOrdering, upto: usize) -> Option<usize> {
    let done = |b: &Board| (0..=upto).all(|q| b.position_of(ordering.feature_at(q) as u8) as usize == ordering.feature_at(q));
    let mut dist = HashMap::from([(b.key(), 0usize)]);
    let mut queue = VecDeque::from([*b]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s.key()];
        if done(&s) {
            return Some(d);
        }
        for m in Move::ALL {
            if let Some(n) = s.apply_move(m) {
                dist.entry(n.key()).or_insert_with(|| {
                    queue.push_back(n);
                    d + 1
                });
            }
        }
    }
    None
}

/// Sample bound by its closed form, without any guarding.
pub fn sample_bound(epsilon: f64, delta: f64, dim: f64) -> u64 {
    ((dim * std::f64::consts::LN_2 + (1.0 / delta).ln()) / epsilon).ceil() as u64
}

/// Relative gap between a central finite difference of `answer` and the
/// value of `integrand` at `x`.
pub fn derivative_gap(answer: &Expr, integrand: &Expr, x: f64) -> Option<f64> {
    let h = 1e-5;
    let f = |x| eval(answer, x).map(|d| d.value);
    let slope = (f(x + h)? - f(x - h)?) / (2.0 * h);
    let want = eval(integrand, x)?.value;
    Some((slope - want).abs() / want.abs().max(1.0))
}
