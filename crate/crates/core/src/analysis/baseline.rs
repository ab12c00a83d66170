//! Reference baselines: edit distance and externally computed similarity
//! scores (for example BERTScore) ingested from CSV.

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;

use super::levenshtein::levenshtein_baseline;
use super::stats::{mean, mse, pearson, spearman};
use super::AnalysisError;
use crate::harness::BenchmarkItem;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineReport {
    pub benchmark: String,
    pub method: String,
    pub n: usize,
    pub r: Option<f64>,
    pub rho: Option<f64>,
    pub mse: Option<f64>,
}

/// Correlation and MSE of `preds` against `labels`, on whatever scale the
/// caller chose for both.
pub fn baseline_report(
    benchmark: &str,
    method: &str,
    preds: &[f64],
    labels: &[f64],
) -> Result<BaselineReport, AnalysisError> {
    if preds.len() != labels.len() {
        return Err(AnalysisError::Malformed(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    Ok(BaselineReport {
        benchmark: benchmark.to_string(),
        method: method.to_string(),
        n: preds.len(),
        r: pearson(preds, labels).ok(),
        rho: spearman(preds, labels).ok(),
        mse: mse(preds, labels).ok(),
    })
}

/// Edit-distance baselines for one benchmark: similarity on [0, 1] against
/// the normalised label, and raw distance against the label.
pub fn levenshtein_reports(
    benchmark: &str,
    items: &[BenchmarkItem],
) -> Result<Vec<BaselineReport>, AnalysisError> {
    let preds = levenshtein_baseline(items);
    let labels: Vec<f64> = items.iter().map(|i| i.label).collect();
    let sim: Vec<f64> = preds.iter().map(|p| p.similarity).collect();
    let dist: Vec<f64> = preds.iter().map(|p| p.distance as f64).collect();
    Ok(vec![
        baseline_report(benchmark, "levenshtein_similarity", &sim, &labels)?,
        baseline_report(benchmark, "levenshtein_distance", &dist, &labels)?,
    ])
}

/// Reads `item_id,score` rows (header required).
pub fn read_scores(path: impl AsRef<Path>) -> Result<HashMap<String, f64>, AnalysisError> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| AnalysisError::Malformed(format!(
        "{}: {e}",
        path.display()
    )))?;
    let mut out = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| AnalysisError::Malformed(format!("{}: {e}", path.display())))?;
        let (Some(id), Some(score)) = (rec.get(0), rec.get(1)) else {
            return Err(AnalysisError::Malformed(format!(
                "{}:{}: expected item_id,score",
                path.display(),
                i + 2
            )));
        };
        let score: f64 = score.trim().parse().map_err(|_| {
            AnalysisError::Malformed(format!("{}:{}: bad score {score:?}", path.display(), i + 2))
        })?;
        out.insert(id.trim().to_string(), score);
    }
    Ok(out)
}

/// Score baseline over the items that have a score.
pub fn score_report(
    benchmark: &str,
    method: &str,
    items: &[BenchmarkItem],
    scores: &HashMap<String, f64>,
) -> Result<BaselineReport, AnalysisError> {
    let (p, l): (Vec<f64>, Vec<f64>) = items
        .iter()
        .filter_map(|i| Some((*scores.get(&i.id)?, i.label)))
        .unzip();
    if p.is_empty() {
        return Err(AnalysisError::Empty(format!("no scores match {benchmark} items")));
    }
    baseline_report(benchmark, method, &p, &l)
}

/// Mean correlation over reports of one method, skipping undefined ones.
pub fn mean_r(reports: &[BaselineReport]) -> Option<f64> {
    let rs: Vec<f64> = reports.iter().filter_map(|r| r.r).collect();
    (!rs.is_empty()).then(|| mean(&rs))
}
