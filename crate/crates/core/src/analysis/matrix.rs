//! Intra-model agreement between formats.

use std::collections::BTreeMap;

use serde::Serialize;

use super::stats::spearman;
use super::AnalysisError;
use crate::harness::RunRecord;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementMatrix {
    pub model: String,
    pub formats: Vec<String>,
    /// Spearman between two formats' outputs on their shared items;
    /// `None` where one side is constant.
    pub values: Vec<Vec<Option<f64>>>,
    /// Shared parsed items per pair.
    pub overlap: Vec<Vec<usize>>,
}

type ItemKey = (String, String, u32);

/// Square matrix over the scored formats of `model`.
pub fn format_agreement_matrix(
    records: &[RunRecord],
    model: &str,
) -> Result<AgreementMatrix, AnalysisError> {
    let mut by_format: BTreeMap<&str, BTreeMap<ItemKey, f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.model == model && r.format_family.is_some()) {
        let entry = by_format.entry(r.format_id.as_str()).or_default();
        if let Some(v) = r.normalized_value {
            entry.insert((r.benchmark.clone(), r.item_id.clone(), r.repeat), v);
        }
    }
    if by_format.len() < 2 {
        return Err(AnalysisError::InsufficientOverlap(format!(
            "model {model:?} has {} scored formats, need 2",
            by_format.len()
        )));
    }
    let formats: Vec<String> = by_format.keys().map(|s| s.to_string()).collect();
    let maps: Vec<&BTreeMap<ItemKey, f64>> = by_format.values().collect();
    let n = formats.len();
    let mut values = vec![vec![None; n]; n];
    let mut overlap = vec![vec![0; n]; n];
    for i in 0..n {
        values[i][i] = Some(1.0);
        overlap[i][i] = maps[i].len();
        for j in i + 1..n {
            let (xs, ys): (Vec<f64>, Vec<f64>) = maps[i]
                .iter()
                .filter_map(|(k, &x)| Some((x, *maps[j].get(k)?)))
                .unzip();
            if xs.len() < 2 {
                return Err(AnalysisError::InsufficientOverlap(format!(
                    "{} and {} share {} parsed items",
                    formats[i],
                    formats[j],
                    xs.len()
                )));
            }
            let rho = spearman(&xs, &ys).ok();
            values[i][j] = rho;
            values[j][i] = rho;
            overlap[i][j] = xs.len();
            overlap[j][i] = xs.len();
        }
    }
    Ok(AgreementMatrix {
        model: model.to_string(),
        formats,
        values,
        overlap,
    })
}
