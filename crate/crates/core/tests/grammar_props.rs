//! Recognizer and mask properties over random grammars.

mod common;

use common::{check_mask_case, random_grammar, random_prefix, random_vocab, MaskCase};
use gcd_audit::grammar::{compile_gbnf, parse_gbnf};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mask_matches_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let MaskCase::Mismatch(why) = check_mask_case(&mut rng) {
            prop_assert!(false, "{}", why);
        }
    }

    #[test]
    fn advance_composes(seed in any::<u64>(), split in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, g) = random_grammar(&mut rng);
        let text = random_prefix(&mut rng, &g);
        let cut = text.char_indices().nth(split).map_or(text.len(), |(i, _)| i);
        let (a, b) = text.split_at(cut);
        let s0 = g.initial_state().unwrap();
        let whole = g.advance_text(&s0, &text).unwrap();
        let parts = g.advance_text(&g.advance_text(&s0, a).unwrap(), b).unwrap();
        prop_assert_eq!(whole, parts);
    }

    #[test]
    fn mask_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (text, g) = random_grammar(&mut rng);
        let vocab = random_vocab(&mut rng);
        let prefix = random_prefix(&mut rng, &g);
        let s = g.advance_text(&g.initial_state().unwrap(), &prefix).unwrap();
        prop_assume!(!s.is_rejected());
        let again = compile_gbnf(&text).unwrap();
        let s2 = again.advance_text(&again.initial_state().unwrap(), &prefix).unwrap();
        prop_assert_eq!(g.allowed_tokens(&s, &vocab).unwrap(), again.allowed_tokens(&s2, &vocab).unwrap());
    }

    #[test]
    fn printed_grammar_reparses_to_same_language(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (text, g) = random_grammar(&mut rng);
        let printed = parse_gbnf(&text).unwrap().to_string();
        let g2 = compile_gbnf(&printed).unwrap();
        for _ in 0..8 {
            let p = random_prefix(&mut rng, &g);
            prop_assert_eq!(g.validate_output(&p), g2.validate_output(&p), "{}", p);
        }
    }
}
