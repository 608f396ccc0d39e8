//! The Eight Puzzle as a feature domain. Features are tiles (0 is the
//! blank), values are positions. Position 0 is the center and 1..8 ring the
//! border clockwise from the top-left:
//!
//! ```text
//! 1 2 3
//! 8 0 4
//! 7 6 5
//! ```
//!
//! Moves name the direction a tile slides into the blank: `r` moves the tile
//! left of the blank to the right, and so on.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::framework::{ApplyError, Domain, OpIndex, Solution, Step};
use crate::macro_table::{Cell, FeatureDomain, FeatureOrdering, FeatureState, Macro, MacroTable, TableError};

pub const TILES: usize = 9;
pub const SOLVABLE_STATES: usize = 181_440;

const COORD: [(i8, i8); TILES] = [(1, 1), (0, 0), (0, 1), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0)];
const GRID: [[u8; 3]; 3] = [[1, 2, 3], [8, 0, 4], [7, 6, 5]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Move {
    R,
    L,
    U,
    D,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::R, Move::L, Move::U, Move::D];

    pub fn op(self) -> OpIndex {
        OpIndex::from_zero_based(self as usize)
    }

    pub fn from_op(op: OpIndex) -> Option<Move> {
        Move::ALL.get(op.zero_based()).copied()
    }

    pub fn letter(self) -> char {
        ['r', 'l', 'u', 'd'][self as usize]
    }

    pub fn from_letter(c: char) -> Option<Move> {
        Move::ALL.into_iter().find(|m| m.letter() == c)
    }

    pub fn reverse(self) -> Move {
        match self {
            Move::R => Move::L,
            Move::L => Move::R,
            Move::U => Move::D,
            Move::D => Move::U,
        }
    }

    /// Where the blank goes: opposite to the tile's motion.
    fn blank_delta(self) -> (i8, i8) {
        match self {
            Move::R => (0, -1),
            Move::L => (0, 1),
            Move::U => (1, 0),
            Move::D => (-1, 0),
        }
    }
}

/// Position the blank moves to, if the move is possible.
pub fn blank_target(blank: u8, m: Move) -> Option<u8> {
    let (r, c) = COORD[blank as usize];
    let (dr, dc) = m.blank_delta();
    let (r, c) = (r + dr, c + dc);
    (0..3).contains(&r).then_some(())?;
    (0..3).contains(&c).then_some(())?;
    Some(GRID[r as usize][c as usize])
}

pub fn manhattan(a: u8, b: u8) -> u32 {
    let (ra, ca) = COORD[a as usize];
    let (rb, cb) = COORD[b as usize];
    (ra.abs_diff(rb) + ca.abs_diff(cb)) as u32
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Board {
    /// position of each tile
    pos: [u8; TILES],
    /// tile at each position
    at: [u8; TILES],
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoardError {
    #[error("expected 9 digits, got {0:?}")]
    Format(String),
    #[error("not a permutation of 0..8")]
    NotPermutation,
}

impl Board {
    pub fn goal() -> Board {
        let id = [0, 1, 2, 3, 4, 5, 6, 7, 8];
        Board { pos: id, at: id }
    }

    /// `at[p]` is the tile at position `p`.
    pub fn from_tiles(at: [u8; TILES]) -> Result<Board, BoardError> {
        let mut pos = [u8::MAX; TILES];
        for (p, &t) in at.iter().enumerate() {
            if t as usize >= TILES || pos[t as usize] != u8::MAX {
                return Err(BoardError::NotPermutation);
            }
            pos[t as usize] = p as u8;
        }
        Ok(Board { pos, at })
    }

    pub fn position_of(&self, tile: u8) -> u8 {
        self.pos[tile as usize]
    }

    pub fn tile_at(&self, position: u8) -> u8 {
        self.at[position as usize]
    }

    pub fn blank(&self) -> u8 {
        self.pos[0]
    }

    pub fn positions(&self) -> &[u8; TILES] {
        &self.pos
    }

    pub fn apply_move(&self, m: Move) -> Option<Board> {
        let b = self.pos[0];
        let t = blank_target(b, m)?;
        let tile = self.at[t as usize];
        let mut next = *self;
        next.pos[0] = t;
        next.pos[tile as usize] = b;
        next.at[b as usize] = tile;
        next.at[t as usize] = 0;
        Some(next)
    }

    pub fn apply_moves(&self, moves: &str) -> Option<Board> {
        moves
            .chars()
            .try_fold(*self, |b, c| b.apply_move(Move::from_letter(c)?))
    }

    /// Parity of the tile-to-position permutation must match the parity of
    /// the blank's distance from the center: every move changes both.
    pub fn is_solvable(&self) -> bool {
        let mut seen = [false; TILES];
        let mut transpositions = 0;
        for start in 0..TILES {
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.pos[i] as usize;
                len += 1;
            }
            if len > 0 {
                transpositions += len - 1;
            }
        }
        transpositions % 2 == manhattan(self.pos[0], 0) as usize % 2
    }

    /// Uniform over solvable boards.
    pub fn random_solvable<R: Rng + ?Sized>(rng: &mut R) -> Board {
        let mut at = [0, 1, 2, 3, 4, 5, 6, 7, 8];
        loop {
            at.shuffle(rng);
            let b = Board::from_tiles(at).expect("shuffled permutation");
            if b.is_solvable() {
                return b;
            }
        }
    }

    /// 36-bit packing, for hashing in searches.
    pub fn key(&self) -> u64 {
        self.at.iter().fold(0, |k, &t| k << 4 | t as u64)
    }
}

impl fmt::Display for Board {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in self.at {
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Board {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Board({self})")
    }
}

impl FromStr for Board {
    type Err = BoardError;

    fn from_str(s: &str) -> Result<Board, BoardError> {
        let digits: Vec<u8> = s
            .trim()
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as u8))
            .collect::<Option<_>>()
            .ok_or_else(|| BoardError::Format(s.to_owned()))?;
        let at: [u8; TILES] = digits.try_into().map_err(|_| BoardError::Format(s.to_owned()))?;
        Board::from_tiles(at)
    }
}

/// Grid picture, three rows, blank shown as `_`.
pub fn render(b: &Board) -> String {
    GRID.iter()
        .map(|row| {
            row.iter()
                .map(|&p| match b.tile_at(p) {
                    0 => "_".to_owned(),
                    t => t.to_string(),
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn moves_to_string(m: &Macro) -> String {
    m.0.iter().map(|&op| Move::from_op(op).map_or('?', Move::letter)).collect()
}

pub fn macro_from_str(s: &str) -> Option<Macro> {
    s.chars().map(|c| Move::from_letter(c).map(Move::op)).collect::<Option<_>>().map(Macro)
}

pub fn steps_to_string(steps: &[Step]) -> String {
    steps.iter().map(|s| Move::from_op(s.op).map_or('?', Move::letter)).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EightPuzzle;

impl Domain for EightPuzzle {
    type State = Board;

    fn operator_count(&self) -> usize {
        4
    }

    fn operator_name(&self, op: OpIndex) -> String {
        Move::from_op(op).map_or_else(|| op.to_string(), |m| m.letter().to_string())
    }

    fn is_goal(&self, b: &Board) -> bool {
        *b == Board::goal()
    }

    fn apply(&self, b: &Board, step: &Step) -> Result<Board, ApplyError> {
        let m = Move::from_op(step.op).ok_or(ApplyError::UnknownOperator(step.op))?;
        b.apply_move(m).ok_or(ApplyError::Inapplicable(step.op))
    }

    fn state_size(&self, _: &Board) -> usize {
        TILES
    }
}

impl FeatureDomain for EightPuzzle {
    fn feature_count(&self) -> usize {
        TILES
    }

    fn value_count(&self) -> usize {
        TILES
    }

    fn feature(&self, b: &Board, i: usize) -> u8 {
        b.pos[i]
    }
}

pub fn goal_features() -> FeatureState {
    FeatureState(Board::goal().pos.to_vec())
}

pub fn blank_first() -> FeatureOrdering {
    FeatureOrdering::identity(TILES)
}

pub fn blank_last() -> FeatureOrdering {
    FeatureOrdering::new((1..TILES).chain([0]).collect()).expect("permutation")
}

pub fn empty_table(ordering: FeatureOrdering) -> MacroTable {
    MacroTable::new(TILES, goal_features(), ordering).expect("valid puzzle table")
}

/// Every board reachable from the goal, in breadth-first order.
pub fn reachable_boards() -> Vec<Board> {
    let start = Board::goal();
    let mut seen = HashSet::with_capacity(SOLVABLE_STATES);
    seen.insert(start.key());
    let mut order = vec![start];
    let mut queue = VecDeque::from([start]);
    while let Some(b) = queue.pop_front() {
        for m in Move::ALL {
            if let Some(n) = b.apply_move(m) {
                if seen.insert(n.key()) {
                    order.push(n);
                    queue.push_back(n);
                }
            }
        }
    }
    order
}

fn subgoal_holds(b: &Board, ordering: &FeatureOrdering, upto: usize) -> bool {
    (0..=upto).all(|q| {
        let t = ordering.feature_at(q);
        b.pos[t] as usize == t
    })
}

/// Sum of Manhattan distances of the non-blank tiles in ordered positions
/// `0..=upto`.
pub fn subgoal_heuristic(b: &Board, ordering: &FeatureOrdering, upto: usize) -> u32 {
    (0..=upto)
        .map(|q| ordering.feature_at(q))
        .filter(|&t| t != 0)
        .map(|t| manhattan(b.pos[t], t as u8))
        .sum()
}

/// Bounds the iterative deepening; puzzle subgoals never need this many
/// moves, so hitting it means the subgoal is unreachable.
pub const IDA_DEPTH_LIMIT: u32 = 40;

/// Shortest move sequence bringing the tiles in ordered positions
/// `0..=upto` home, by IDA* with moves tried in the order r, l, u, d and
/// immediate reversals pruned. `None` if no sequence within
/// [`IDA_DEPTH_LIMIT`] exists.
pub fn ida_star_subgoal(b: &Board, ordering: &FeatureOrdering, upto: usize) -> Option<Macro> {
    struct Search<'a> {
        ordering: &'a FeatureOrdering,
        upto: usize,
        path: Vec<Move>,
    }

    impl Search<'_> {
        /// Found, or the least f over the bound seen.
        fn dfs(&mut self, b: &Board, g: u32, bound: u32, prev: Option<Move>) -> Result<(), u32> {
            let f = g + subgoal_heuristic(b, self.ordering, self.upto);
            if f > bound {
                return Err(f);
            }
            if subgoal_holds(b, self.ordering, self.upto) {
                return Ok(());
            }
            let mut next = u32::MAX;
            for m in Move::ALL {
                if prev == Some(m.reverse()) {
                    continue;
                }
                let Some(c) = b.apply_move(m) else { continue };
                self.path.push(m);
                match self.dfs(&c, g + 1, bound, Some(m)) {
                    Ok(()) => return Ok(()),
                    Err(over) => next = next.min(over),
                }
                self.path.pop();
            }
            Err(next)
        }
    }

    let mut s = Search {
        ordering,
        upto,
        path: Vec::new(),
    };
    let mut bound = subgoal_heuristic(b, ordering, upto);
    loop {
        match s.dfs(b, 0, bound, None) {
            Ok(()) => return Some(Macro(s.path.into_iter().map(Move::op).collect())),
            Err(next) if next <= IDA_DEPTH_LIMIT => bound = next,
            Err(_) => return None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TeacherError {
    #[error("no macro brings ordered position {position} home from {board}")]
    Unreachable { board: Board, position: usize },
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Search-based teacher that solves column by column, reusing the macro in
/// a cell once one is stored and searching (then storing) otherwise, so
/// that all its solutions come from one growing table.
#[derive(Clone, Debug)]
pub struct IntegratedTeacher {
    table: MacroTable,
    searches: usize,
}

impl IntegratedTeacher {
    pub fn new(ordering: FeatureOrdering) -> IntegratedTeacher {
        IntegratedTeacher::with_table(empty_table(ordering))
    }

    pub fn with_table(table: MacroTable) -> IntegratedTeacher {
        IntegratedTeacher { table, searches: 0 }
    }

    pub fn table(&self) -> &MacroTable {
        &self.table
    }

    pub fn into_table(self) -> MacroTable {
        self.table
    }

    /// Number of IDA* searches run so far.
    pub fn searches(&self) -> usize {
        self.searches
    }

    pub fn solve(&mut self, problem: &Board) -> Result<Solution, TeacherError> {
        if !problem.is_solvable() {
            return Ok(Solution::Bottom);
        }
        let ordering = self.table.ordering().clone();
        let mut b = *problem;
        let mut steps = Vec::new();
        for i in 0..TILES {
            let j = b.pos[ordering.feature_at(i)] as usize;
            let m = match self.table.cell(j, i) {
                Cell::Filled(m) => m.clone(),
                Cell::Unfilled => {
                    self.searches += 1;
                    let m = ida_star_subgoal(&b, &ordering, i).ok_or(TeacherError::Unreachable { board: b, position: i })?;
                    self.table.insert(j, i, m.clone())?;
                    m
                }
            };
            for step in m.steps() {
                b = EightPuzzle.apply(&b, &step).expect("stored macros apply in their cells");
                steps.push(step);
            }
        }
        debug_assert!(EightPuzzle.is_goal(&b));
        Ok(Solution::Steps(steps))
    }
}

/// Fills every reachable cell by searching from the first board (in the
/// given order) that falls into it.
pub fn exhaustive_table(ordering: FeatureOrdering, boards: &[Board]) -> Result<MacroTable, TeacherError> {
    let mut table = empty_table(ordering.clone());
    for b in boards {
        for i in 0..TILES {
            if i > 0 && !subgoal_holds(b, &ordering, i - 1) {
                break;
            }
            let j = b.pos[ordering.feature_at(i)] as usize;
            if *table.cell(j, i) == Cell::Unfilled {
                let m = ida_star_subgoal(b, &ordering, i).ok_or(TeacherError::Unreachable { board: *b, position: i })?;
                table.insert(j, i, m)?;
            }
        }
    }
    Ok(table)
}
