use std::fmt;

use thiserror::Error;

use super::{Grammar, Sym};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Node {
    label: Sym,
    arity: u16,
    /// Number of nodes in the subtree rooted here, itself included.
    size: u32,
}

/// An ordered labeled tree stored in pre-order. Used both for full parse
/// trees (all leaves terminals) and for caps (leaves may be nonterminals).
///
/// Because every subtree occupies a contiguous run of the node array,
/// subtrees are borrowed as slices without copying.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    nodes: Vec<Node>,
}

/// Borrowed view of a tree or of one of its subtrees.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Subtree<'a> {
    nodes: &'a [Node],
}

impl Tree {
    pub fn leaf(label: Sym) -> Tree {
        Tree {
            nodes: vec![Node {
                label,
                arity: 0,
                size: 1,
            }],
        }
    }

    pub fn view(&self) -> Subtree<'_> {
        Subtree { nodes: &self.nodes }
    }

    /// Subtree whose root sits at pre-order offset `offset`.
    pub fn subtree_at(&self, offset: usize) -> Subtree<'_> {
        let size = self.nodes[offset].size as usize;
        Subtree {
            nodes: &self.nodes[offset..offset + size],
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.view().fmt(f)
    }
}

impl<'a> Subtree<'a> {
    pub fn label(&self) -> Sym {
        self.nodes[0].label
    }

    pub fn arity(&self) -> usize {
        self.nodes[0].arity as usize
    }

    pub fn is_leaf(&self) -> bool {
        self.nodes[0].arity == 0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn children(&self) -> Children<'a> {
        Children {
            rest: &self.nodes[1..],
            remaining: self.nodes[0].arity,
        }
    }

    pub fn child(&self, index: usize) -> Option<Subtree<'a>> {
        self.children().nth(index)
    }

    pub fn to_tree(&self) -> Tree {
        Tree {
            nodes: self.nodes.to_vec(),
        }
    }

    /// Leaf labels, left to right.
    pub fn yield_symbols(&self) -> Vec<Sym> {
        self.nodes.iter().filter(|n| n.arity == 0).map(|n| n.label).collect()
    }

    /// Labels of the direct children.
    pub fn child_labels(&self) -> impl Iterator<Item = Sym> + 'a {
        self.children().map(|c| c.label())
    }

    /// True iff `self` is a cap of `tree`: same root, and wherever `self`
    /// has children, `tree` has exactly the same children there.
    pub fn is_cap_of(&self, tree: Subtree<'_>) -> bool {
        if self.label() != tree.label() {
            return false;
        }
        if self.is_leaf() {
            return true;
        }
        if self.arity() != tree.arity() {
            return false;
        }
        self.children().zip(tree.children()).all(|(a, b)| a.is_cap_of(b))
    }

    /// Indented rendering, one node per line.
    pub fn render(&self, grammar: &Grammar) -> String {
        fn go(t: Subtree<'_>, g: &Grammar, depth: usize, out: &mut String) {
            for _ in 0..depth {
                out.push_str("  ");
            }
            out.push_str(g.name(t.label()));
            out.push('\n');
            for c in t.children() {
                go(c, g, depth + 1, out);
            }
        }
        let mut out = String::new();
        go(*self, grammar, 0, &mut out);
        out
    }
}

impl fmt::Debug for Subtree<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label().index())?;
        if !self.is_leaf() {
            f.write_str("(")?;
            for (i, c) in self.children().enumerate() {
                if i > 0 {
                    f.write_str(" ")?;
                }
                c.fmt(f)?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

pub struct Children<'a> {
    rest: &'a [Node],
    remaining: u16,
}

impl<'a> Iterator for Children<'a> {
    type Item = Subtree<'a>;

    fn next(&mut self) -> Option<Subtree<'a>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let size = self.rest[0].size as usize;
        let (head, tail) = self.rest.split_at(size);
        self.rest = tail;
        Some(Subtree { nodes: head })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining as usize, Some(self.remaining as usize))
    }
}

impl ExactSizeIterator for Children<'_> {}

/// Incremental pre-order construction.
#[derive(Default)]
pub struct TreeBuilder {
    nodes: Vec<Node>,
    open: Vec<usize>,
}

impl TreeBuilder {
    pub fn new() -> TreeBuilder {
        TreeBuilder::default()
    }

    pub fn with_capacity(n: usize) -> TreeBuilder {
        TreeBuilder {
            nodes: Vec::with_capacity(n),
            open: Vec::new(),
        }
    }

    fn bump_parent(&mut self) {
        if let Some(&p) = self.open.last() {
            self.nodes[p].arity += 1;
        }
    }

    /// Pre-order offset the next node will get.
    pub fn offset(&self) -> usize {
        self.nodes.len()
    }

    pub fn open(&mut self, label: Sym) -> usize {
        self.bump_parent();
        let at = self.nodes.len();
        self.nodes.push(Node {
            label,
            arity: 0,
            size: 0,
        });
        self.open.push(at);
        at
    }

    pub fn close(&mut self) {
        let at = self.open.pop().expect("close without open");
        self.nodes[at].size = (self.nodes.len() - at) as u32;
    }

    pub fn leaf(&mut self, label: Sym) {
        self.open(label);
        self.close();
    }

    pub fn push_subtree(&mut self, sub: Subtree<'_>) {
        self.bump_parent();
        self.nodes.extend_from_slice(sub.nodes);
    }

    pub fn finish(self) -> Tree {
        assert!(self.open.is_empty(), "unclosed nodes");
        assert!(!self.nodes.is_empty(), "empty tree");
        assert_eq!(self.nodes[0].size as usize, self.nodes.len(), "forest instead of tree");
        Tree { nodes: self.nodes }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MscError {
    #[error("no trees given")]
    Empty,
    #[error("trees have different root labels")]
    IncompatibleRoots,
}

/// Most specific common cap: marching down all trees together, a node's
/// children are kept iff every input has exactly the same child labels
/// there.
pub fn msc(trees: &[Subtree<'_>]) -> Result<Tree, MscError> {
    let (first, rest) = trees.split_first().ok_or(MscError::Empty)?;
    if rest.iter().any(|t| t.label() != first.label()) {
        return Err(MscError::IncompatibleRoots);
    }
    fn go(nodes: &[Subtree<'_>], out: &mut TreeBuilder) {
        let head = nodes[0];
        out.open(head.label());
        let agree = !head.is_leaf()
            && nodes[1..]
                .iter()
                .all(|t| t.arity() == head.arity() && t.child_labels().eq(head.child_labels()));
        if agree {
            let mut iters: Vec<Children<'_>> = nodes.iter().map(|t| t.children()).collect();
            let mut column = Vec::with_capacity(nodes.len());
            for _ in 0..head.arity() {
                column.clear();
                column.extend(iters.iter_mut().map(|it| it.next().unwrap()));
                go(&column, out);
            }
        }
        out.close();
    }
    let mut out = TreeBuilder::new();
    go(trees, &mut out);
    Ok(out.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(i: u16) -> Sym {
        Sym(i)
    }

    /// 0(1(3 4) 2)
    fn sample() -> Tree {
        let mut b = TreeBuilder::new();
        b.open(s(0));
        b.open(s(1));
        b.leaf(s(3));
        b.leaf(s(4));
        b.close();
        b.leaf(s(2));
        b.close();
        b.finish()
    }

    #[test]
    fn navigation() {
        let t = sample();
        let v = t.view();
        assert_eq!(v.arity(), 2);
        assert_eq!(v.child(0).unwrap().label(), s(1));
        assert_eq!(v.child(1).unwrap().label(), s(2));
        assert_eq!(v.yield_symbols(), vec![s(3), s(4), s(2)]);
        assert_eq!(t.subtree_at(1).yield_symbols(), vec![s(3), s(4)]);
        assert_eq!(Tree::leaf(s(0)).view().yield_symbols(), vec![s(0)]);
    }

    #[test]
    fn caps() {
        let t = sample();
        let root_only = Tree::leaf(s(0));
        assert!(root_only.view().is_cap_of(t.view()));
        assert!(t.view().is_cap_of(t.view()));
        let mut b = TreeBuilder::new();
        b.open(s(0));
        b.leaf(s(1));
        b.leaf(s(2));
        b.close();
        let c = b.finish();
        assert!(c.view().is_cap_of(t.view()));
        assert!(!t.view().is_cap_of(c.view()));
    }

    #[test]
    fn msc_basics() {
        let t = sample();
        assert_eq!(msc(&[t.view()]).unwrap(), t);
        let mut b = TreeBuilder::new();
        b.open(s(0));
        b.open(s(1));
        b.leaf(s(3));
        b.leaf(s(5));
        b.close();
        b.leaf(s(2));
        b.close();
        let u = b.finish();
        let m = msc(&[t.view(), u.view()]).unwrap();
        assert_eq!(m.view().yield_symbols(), vec![s(1), s(2)]);
        assert!(m.view().is_cap_of(t.view()) && m.view().is_cap_of(u.view()));
        assert_eq!(msc(&[t.view(), Tree::leaf(s(9)).view()]), Err(MscError::IncompatibleRoots));
        assert_eq!(msc(&[]), Err(MscError::Empty));
    }
}
