use std::collections::HashSet;
use std::sync::OnceLock;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use speedup_core::eight_puzzle::{
    blank_first, blank_last, empty_table, exhaustive_table, ida_star_subgoal, moves_to_string, reachable_boards,
    subgoal_heuristic, Board, EightPuzzle, IntegratedTeacher, Move, SOLVABLE_STATES, TILES,
};
use speedup_core::framework::{is_consistent, Domain, Example, Solution};
use speedup_core::macro_table::{
    check_serial_decomposability, macro_solve, macro_solve_diagnosed, serial_parse, serial_parse_one, verify_table,
    Cell, Macro, MacroTable, TableViolation,
};
use speedup_oracles::{bfs_subgoal_len, count_reachable_boards};

fn boards() -> &'static [Board] {
    static B: OnceLock<Vec<Board>> = OnceLock::new();
    B.get_or_init(reachable_boards)
}

fn full_table() -> &'static MacroTable {
    static T: OnceLock<MacroTable> = OnceLock::new();
    T.get_or_init(|| exhaustive_table(blank_first(), boards()).unwrap())
}

fn tile_one_off_board() -> Board {
    "031245678".parse::<Board>().unwrap()
}

#[test]
fn state_space() {
    assert_eq!(boards().len(), SOLVABLE_STATES);
    assert_eq!(count_reachable_boards(), SOLVABLE_STATES);
    assert!(boards().iter().all(Board::is_solvable));
    let reached: HashSet<u64> = boards().iter().map(Board::key).collect();
    // every permutation: solvable iff reached
    let mut at = [0u8, 1, 2, 3, 4, 5, 6, 7, 8];
    let mut count = 0;
    permute(&mut at, 0, &mut |p| {
        let b = Board::from_tiles(*p).unwrap();
        assert_eq!(b.is_solvable(), reached.contains(&b.key()), "{b}");
        count += 1;
    });
    assert_eq!(count, 362_880);
}

fn permute(a: &mut [u8; 9], k: usize, f: &mut impl FnMut(&[u8; 9])) {
    if k == a.len() {
        return f(a);
    }
    for i in k..a.len() {
        a.swap(k, i);
        permute(a, k + 1, f);
        a.swap(k, i);
    }
}

#[test]
fn decomposability() {
    assert!(check_serial_decomposability(&EightPuzzle, &blank_first(), boards()).is_ok());
    let w = check_serial_decomposability(&EightPuzzle, &blank_last(), boards()).unwrap_err();
    let a = EightPuzzle.apply(&w.first, &speedup_core::framework::Step::plain(w.op)).ok();
    let b = EightPuzzle.apply(&w.second, &speedup_core::framework::Step::plain(w.op)).ok();
    let f = blank_last().feature_at(w.position);
    assert_ne!(a.map(|s| s.position_of(f as u8)), b.map(|s| s.position_of(f as u8)));
}

#[test]
fn exhaustive_table_properties() {
    let t = full_table();
    assert_eq!(t.nonempty_count(), 35);
    // reachable cells: 9 blank positions, 8..3 for tiles 1..6, then one each
    assert_eq!(t.filled_count(), 9 + 8 + 7 + 6 + 5 + 4 + 3 + 1 + 1);
    let report = verify_table(t, &EightPuzzle, boards()).unwrap();
    assert_eq!(report.cells_checked, t.filled_count());
    for (_, _, m) in t.filled() {
        let s = moves_to_string(m);
        for pair in ["rl", "lr", "ud", "du"] {
            assert!(!s.contains(pair), "{s}");
        }
    }
    assert_eq!(moves_to_string(match t.cell(2, 1) {
        Cell::Filled(m) => m,
        Cell::Unfilled => panic!(),
    }), "rdlu");
}

#[test]
fn truncated_macro_is_caught() {
    let mut t = full_table().clone();
    let Cell::Filled(m) = t.cell(2, 1).clone() else { panic!() };
    t.replace(2, 1, Cell::Filled(Macro(m.0[..m.len() - 1].to_vec()))).unwrap();
    assert!(matches!(
        verify_table(&t, &EightPuzzle, boards()),
        Err(TableViolation::Property { value: 2, position: 1, .. })
    ));
}

#[test]
fn macro_solve_solves_everything() {
    let t = full_table();
    assert_eq!(macro_solve(t, &EightPuzzle, &Board::goal()).unwrap(), Solution::Steps(vec![]));
    let longest = t.longest_macro();
    for b in boards().iter().step_by(37) {
        let run = macro_solve_diagnosed(t, &EightPuzzle, b).unwrap();
        let steps = run.solution.steps().unwrap();
        assert!(steps.len() <= TILES * longest);
    }
}

#[test]
fn walkthrough_with_prefilled_blank_macro() {
    let c = tile_one_off_board();
    let a = c.apply_moves("lu").unwrap();
    assert_eq!(a.blank(), 5);
    let mut table = empty_table(blank_first());
    table.insert(5, 0, speedup_core::eight_puzzle::macro_from_str("dr").unwrap()).unwrap();
    let mut teacher = IntegratedTeacher::with_table(table);
    let sol = teacher.solve(&a).unwrap();
    let moves = speedup_core::eight_puzzle::steps_to_string(sol.steps().unwrap());
    assert!(moves.starts_with("drrdlu"), "{moves}");
    assert_eq!(teacher.table().cell(2, 1), &Cell::Filled(speedup_core::eight_puzzle::macro_from_str("rdlu").unwrap()));
    assert!(teacher.table().filled_count() <= 1 + 8);
}

/// A board in the shape of the walkthrough: tiles 3 and 4 come home along
/// with tile 2, so their cells get null macros.
#[test]
fn null_macros_from_one_example() {
    let found = boards().iter().find(|b| {
        if b.blank() != 5 {
            return false;
        }
        let mut t = IntegratedTeacher::new(blank_first());
        t.solve(b).unwrap();
        matches!(t.table().cell(3, 3), Cell::Filled(m) if m.is_null())
            && matches!(t.table().cell(4, 4), Cell::Filled(m) if m.is_null())
            && matches!(t.table().cell(3, 2), Cell::Filled(m) if !m.is_null())
    });
    let b = found.expect("some board has the shape");
    let mut t = IntegratedTeacher::new(blank_first());
    let sol = t.solve(b).unwrap();
    let learned = serial_parse(
        &[Example {
            problem: *b,
            solution: sol,
        }],
        &EightPuzzle,
        speedup_core::eight_puzzle::goal_features(),
        blank_first(),
    )
    .unwrap();
    assert_eq!(&learned, t.table());
    assert_eq!(learned.filled_count(), TILES);
}

#[test]
fn ida_matches_bfs() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let ord = blank_first();
    for _ in 0..100 {
        let b = Board::random_solvable(&mut rng);
        // walk b down the table to a random column's precondition
        let col = rand::Rng::gen_range(&mut rng, 0..TILES);
        let mut s = b;
        for i in 0..col {
            let m = ida_star_subgoal(&s, &ord, i).unwrap();
            s = s.apply_moves(&moves_to_string(&m)).unwrap();
        }
        let m = ida_star_subgoal(&s, &ord, col).unwrap();
        assert_eq!(Some(m.len()), bfs_subgoal_len(&s, &ord, col), "{s} col {col}");
        assert!(subgoal_heuristic(&s, &ord, col) as usize <= m.len());
    }
}

#[test]
fn heuristic_admissible_on_unconstrained_subgoals() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let ord = blank_first();
    for k in 0..1000 {
        let b = Board::random_solvable(&mut rng);
        let upto = k % 3;
        let opt = bfs_subgoal_len(&b, &ord, upto).unwrap();
        assert!(subgoal_heuristic(&b, &ord, upto) as usize <= opt);
    }
}

#[test]
fn random_solvable_is_uniform_over_blank() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 100_000;
    let mut counts = [0usize; 9];
    for _ in 0..n {
        let b = Board::random_solvable(&mut rng);
        assert!(b.is_solvable());
        counts[b.blank() as usize] += 1;
    }
    let expected = n as f64 / 9.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 8 degrees of freedom; 26.1 is the 0.999 quantile
    assert!(chi2 < 26.1, "{counts:?} chi2 {chi2}");
    let mut r1 = ChaCha8Rng::seed_from_u64(9);
    let mut r2 = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        assert_eq!(Board::random_solvable(&mut r1), Board::random_solvable(&mut r2));
    }
}

#[test]
fn teacher_agrees_with_full_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut teacher = IntegratedTeacher::new(blank_first());
    for _ in 0..500 {
        let b = Board::random_solvable(&mut rng);
        let before = teacher.table().clone();
        let sol = teacher.solve(&b).unwrap();
        assert_eq!(sol, macro_solve(full_table(), &EightPuzzle, &b).unwrap());
        for (j, i, m) in before.filled() {
            assert_eq!(teacher.table().cell(j, i), &Cell::Filled(m.clone()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Tables parsed from teacher solutions reproduce every training
    /// solution, hold only cells the teacher filled, and only grow.
    #[test]
    fn serial_parse_is_consistent(seed in any::<u64>(), count in 1usize..25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut teacher = IntegratedTeacher::new(blank_first());
        let mut sample = Vec::new();
        let mut learned = empty_table(blank_first());
        let mut filled = 0;
        for _ in 0..count {
            let b = Board::random_solvable(&mut rng);
            let solution = teacher.solve(&b).unwrap();
            serial_parse_one(&mut learned, &EightPuzzle, &b, &solution).unwrap();
            prop_assert!(learned.filled_count() >= filled);
            filled = learned.filled_count();
            sample.push(Example { problem: b, solution });
        }
        prop_assert_eq!(&learned, teacher.table());
        prop_assert!(is_consistent(|p| macro_solve(&learned, &EightPuzzle, p).unwrap(), &sample));
        for (j, i, m) in learned.filled() {
            prop_assert_eq!(full_table().cell(j, i), &Cell::Filled(m.clone()));
        }
    }

    #[test]
    fn moves_preserve_the_permutation(seed in any::<u64>(), path in proptest::collection::vec(0usize..4, 0..40)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = Board::random_solvable(&mut rng);
        for m in path {
            if let Some(n) = b.apply_move(Move::ALL[m]) {
                prop_assert!(n.is_solvable());
                prop_assert_eq!(n.apply_move(Move::ALL[m].reverse()), Some(b));
                b = n;
            }
        }
        prop_assert_eq!(b.to_string().parse::<Board>().unwrap(), b);
    }
}
