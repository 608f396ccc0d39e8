use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use speedup_core::grammar::{
    enumerate_sentences, form_matches, membership, msc, msg, parse, Grammar, MscError, SententialForm, Sym, DEFAULT_ENUMERATION_LIMIT,
};
use speedup_core::integration::GRAMMAR_TEXT;
use speedup_oracles::{brute_msc, is_cap, mutate, random_form, random_tree, Nested};

const TOY: &str = "E -> T | T + E\nT -> F | F * T\nF -> a | b | ( E )\n";

fn labels(g: &Grammar, n: usize) -> Vec<Sym> {
    g.symbols().take(n).collect()
}

#[test]
fn msc_matches_brute_force() {
    let g = Grammar::from_text(TOY).unwrap();
    let alphabet = labels(&g, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..500 {
        let base = random_tree(&mut rng, &alphabet, 4);
        let k = rng.gen_range(1..=3);
        let mut inputs: Vec<Nested> = (0..k).map(|_| mutate(&mut rng, &base, &alphabet, 4)).collect();
        if rng.gen_bool(0.1) {
            inputs.push(random_tree(&mut rng, &alphabet, 2));
        }
        let trees: Vec<_> = inputs.iter().map(Nested::to_tree).collect();
        let views: Vec<_> = trees.iter().map(|t| t.view()).collect();
        match (msc(&views), brute_msc(&inputs)) {
            (Ok(got), Some(want)) => {
                assert_eq!(Nested::of(got.view()), want);
                assert!(inputs.iter().all(|t| is_cap(&want, t)));
            }
            (Err(MscError::IncompatibleRoots), None) => {}
            (got, want) => panic!("{inputs:?}: {got:?} vs {want:?}"),
        }
    }
}

#[test]
fn membership_matches_enumeration() {
    let g = Grammar::from_text(TOY).unwrap();
    let all = enumerate_sentences(&g, &[g.start()], 12, DEFAULT_ENUMERATION_LIMIT).unwrap();
    assert!(all.len() > 1000);
    let trees: Vec<_> = all.iter().map(|s| parse(&g, s).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut forms = 0;
    while forms < 20 {
        let steps = rng.gen_range(1..8);
        let form = random_form(&mut rng, &g, steps, 12);
        let sf = SententialForm {
            root: g.start(),
            symbols: form.clone(),
        };
        let derived = enumerate_sentences(&g, &form, 12, DEFAULT_ENUMERATION_LIMIT).unwrap();
        // membership is parse-then-match; parses are shared across forms and
        // the full path is spot-checked
        for (i, (s, t)) in all.iter().zip(&trees).enumerate() {
            let member = form_matches(t.view(), &form);
            assert_eq!(member, derived.contains(s), "{} in {}", g.render(s), g.render(&form));
            if i % 97 == 0 {
                assert_eq!(membership(&g, &sf, s), member);
            }
        }
        forms += 1;
    }
}

#[test]
fn integration_msg_worked_example() {
    let g = Grammar::from_text(GRAMMAR_TEXT).unwrap();
    let p1 = g.symbols_from_str("∫ ( sin x ) + ( x ↑ 2 ) d x").unwrap();
    let p2 = g.symbols_from_str("∫ ( cos x ) + ( sin x ) d x").unwrap();
    let form = msg(&g, &[p1.clone(), p2.clone()]).unwrap();
    assert_eq!(form.display(&g).to_string(), "∫ Trig + P-term d x");
    assert!(membership(&g, &form, &p1) && membership(&g, &form, &p2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// The MSG of any set of sentences contains each of them, and adding a
    /// sentence never makes it more specific.
    #[test]
    fn msg_covers_inputs(seed in any::<u64>(), k in 1usize..5) {
        let g = Grammar::from_text(TOY).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sentences: Vec<Vec<Sym>> = (0..k)
            .map(|_| loop {
                let f = random_form(&mut rng, &g, 40, 12);
                if f.iter().all(|&s| g.is_terminal(s)) {
                    break f;
                }
            })
            .collect();
        let form = msg(&g, &sentences).unwrap();
        for s in &sentences {
            prop_assert!(membership(&g, &form, s));
        }
        if k > 1 {
            let smaller = msg(&g, &sentences[..k - 1]).unwrap();
            for s in enumerate_sentences(&g, &smaller.symbols, 12, DEFAULT_ENUMERATION_LIMIT).unwrap() {
                prop_assert!(membership(&g, &form, &s));
            }
        }
    }
}
