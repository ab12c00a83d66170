//! Invariants of the statistics, baselines and table arithmetic.

mod common;

use std::collections::BTreeMap;

use common::{oracle_mse, oracle_pearson, oracle_spearman};
use gcd_audit::analysis::stats::{mse, pearson, spearman};
use gcd_audit::analysis::{
    deltas_from_cells, levenshtein, pair_similarity_stats, CellRho, ChoiceTable, Column,
    Embeddings,
};
use gcd_audit::formats::{Family, Variant};
use proptest::prelude::*;

fn distinct_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(-1000i32..1000, 2..30)
        .prop_map(|s| s.into_iter().map(f64::from).collect::<Vec<_>>())
        .prop_shuffle()
}

fn word() -> impl Strategy<Value = String> {
    "[abc]{0,6}"
}

proptest! {
    #[test]
    fn spearman_ignores_monotone_maps(
        xs in distinct_vec(),
        seed in any::<u64>(),
        a in 0.1f64..5.0,
        b in -10.0f64..10.0,
    ) {
        let ys: Vec<f64> = xs.iter().enumerate()
            .map(|(i, x)| x * 0.5 + ((i as u64).wrapping_mul(seed | 1) % 97) as f64)
            .collect();
        let base = spearman(&xs, &ys).unwrap();
        let cubed: Vec<f64> = xs.iter().map(|x| a * x.powi(3) + b).collect();
        let exp: Vec<f64> = xs.iter().map(|x| (x / 500.0).exp()).collect();
        prop_assert!((spearman(&cubed, &ys).unwrap() - base).abs() < 1e-12);
        prop_assert!((spearman(&exp, &ys).unwrap() - base).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        prop_assert!((spearman(&neg, &ys).unwrap() + base).abs() < 1e-12);
    }

    #[test]
    fn spearman_identity_and_reversal(xs in distinct_vec()) {
        prop_assert_eq!(spearman(&xs, &xs).unwrap(), 1.0);
        let rev: Vec<f64> = xs.iter().map(|x| -x).collect();
        prop_assert_eq!(spearman(&xs, &rev).unwrap(), -1.0);
    }

    #[test]
    fn correlations_match_oracles(
        pairs in prop::collection::vec((0i32..6, 0i32..6), 2..40),
    ) {
        let xs: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        match oracle_pearson(&xs, &ys) {
            Some(r) => prop_assert!((pearson(&xs, &ys).unwrap() - r).abs() < 1e-12),
            None => prop_assert!(pearson(&xs, &ys).is_err()),
        }
        match oracle_spearman(&xs, &ys) {
            Some(r) => prop_assert!((spearman(&xs, &ys).unwrap() - r).abs() < 1e-12),
            None => prop_assert!(spearman(&xs, &ys).is_err()),
        }
        prop_assert!((mse(&xs, &ys).unwrap() - oracle_mse(&xs, &ys)).abs() < 1e-12);
    }

    #[test]
    fn levenshtein_is_a_metric(a in word(), b in word(), c in word()) {
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert_eq!(levenshtein(&a, &a), 0);
        prop_assert_eq!(levenshtein(&a, &b) == 0, a == b);
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
    }

    #[test]
    fn identical_arms_give_zero_deltas(rhos in prop::collection::vec(-1.0f64..1.0, 1..6)) {
        let mut cells = Vec::new();
        for (i, &rho) in rhos.iter().enumerate() {
            for fam in ["llama", "qwen"] {
                for (nl, sp) in [(false, false), (true, false), (false, true)] {
                    for v in Variant::ALL {
                        for size in ["small", "large"] {
                            cells.push(CellRho {
                                model_family: fam.into(),
                                size: size.into(),
                                benchmark: format!("b{i}"),
                                format_family: Family::Real,
                                variant: v,
                                with_newline: nl,
                                with_space: sp,
                                rho,
                            });
                        }
                    }
                }
            }
        }
        let t = deltas_from_cells(&cells).unwrap();
        for row in &t.rows {
            prop_assert!(row.deltas.iter().all(|d| *d == Some(0.0)), "{:?}", row);
        }
        prop_assert!(t.mean.iter().all(|d| *d == Some(0.0)));
    }

    #[test]
    fn embedding_stats_scale_invariant(
        data in prop::collection::vec(-4.0f32..4.0, 40),
        exp in -6i32..6,
        seed in any::<u64>(),
    ) {
        let e = Embeddings::new(10, 4, data).unwrap();
        // Powers of two scale every component exactly.
        let k = 2f32.powi(exp);
        let pairs = [(0, 1), (2, 3), (4, 5), (6, 7)];
        let a = pair_similarity_stats(&e, &pairs, 50, seed).unwrap();
        let b = pair_similarity_stats(&e.scaled(k), &pairs, 50, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn stock_against_stock_is_zero(acc in 1.0f64..100.0) {
        let rows = vec![("b".to_string(), BTreeMap::from([(Column::Stock, acc)]))];
        let t = ChoiceTable::from_accuracies(rows).unwrap();
        prop_assert_eq!(t.rows[0].cells[&Column::Stock].change, Some(0));
    }
}
