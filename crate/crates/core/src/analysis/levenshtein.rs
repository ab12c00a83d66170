//! Edit distance and the edit-distance baseline.

use serde::Serialize;

use crate::harness::BenchmarkItem;

/// Unit-cost insert/delete/substitute distance over Unicode scalars.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = (diag + usize::from(ca != cb)).min(up + 1).min(row[j] + 1);
            diag = up;
        }
    }
    row[b.len()]
}

/// `1 - d / max(|a|, |b|)`, and 1 when both are empty.
pub fn levenshtein_similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselinePrediction {
    pub item_id: String,
    pub distance: usize,
    pub similarity: f64,
}

pub fn levenshtein_baseline(items: &[BenchmarkItem]) -> Vec<BaselinePrediction> {
    items
        .iter()
        .map(|it| BaselinePrediction {
            item_id: it.id.clone(),
            distance: levenshtein(&it.text_a, &it.text_b),
            similarity: levenshtein_similarity(&it.text_a, &it.text_b),
        })
        .collect()
}
