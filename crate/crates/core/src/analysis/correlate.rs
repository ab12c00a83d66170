//! Grouped correlation reports and the per-format correlation table.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::stats::{mean, mse, pearson, spearman};
use super::AnalysisError;
use crate::formats::{Family, Variant};
use crate::harness::RunRecord;

/// Record attribute to group by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Model,
    ModelFamily,
    Size,
    Benchmark,
    Format,
    FormatFamily,
    Variant,
    Treatment,
}

impl GroupBy {
    pub const ALL: [GroupBy; 8] = [
        GroupBy::Model,
        GroupBy::ModelFamily,
        GroupBy::Size,
        GroupBy::Benchmark,
        GroupBy::Format,
        GroupBy::FormatFamily,
        GroupBy::Variant,
        GroupBy::Treatment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GroupBy::Model => "model",
            GroupBy::ModelFamily => "family",
            GroupBy::Size => "size",
            GroupBy::Benchmark => "benchmark",
            GroupBy::Format => "format",
            GroupBy::FormatFamily => "format_family",
            GroupBy::Variant => "variant",
            GroupBy::Treatment => "treatment",
        }
    }

    fn value(self, r: &RunRecord) -> String {
        match self {
            GroupBy::Model => r.model.clone(),
            GroupBy::ModelFamily => r.model_family.clone(),
            GroupBy::Size => r.model_size.clone(),
            GroupBy::Benchmark => r.benchmark.clone(),
            GroupBy::Format => r.format_id.clone(),
            GroupBy::FormatFamily => r.format_family.map_or_else(String::new, |f| f.to_string()),
            GroupBy::Variant => r.variant.map_or_else(String::new, |v| v.to_string()),
            GroupBy::Treatment => treatment_label(r.with_newline, r.with_space).to_string(),
        }
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for GroupBy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        GroupBy::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| format!("unknown grouping `{s}`"))
    }
}

pub fn treatment_label(with_newline: bool, with_space: bool) -> &'static str {
    match (with_newline, with_space) {
        (false, false) => "none",
        (false, true) => "space",
        (true, false) => "newline",
        (true, true) => "space+newline",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    /// Grouping attribute and value, in the requested order.
    pub key: Vec<(GroupBy, String)>,
    /// Undefined when fewer than two parsed cells or a constant side.
    pub rho: Option<f64>,
    pub r: Option<f64>,
    /// On the [0, 1] scale of both labels and normalised outputs.
    pub mse: Option<f64>,
    /// Parsed cells used.
    pub n: usize,
    pub cells: usize,
    pub parse_failures: usize,
    pub failure_rate: f64,
}

/// Scored records only; multiple-choice records are ignored.
pub fn correlation_table(
    records: &[RunRecord],
    group_by: &[GroupBy],
) -> Result<Vec<CorrelationReport>, AnalysisError> {
    let mut groups: BTreeMap<Vec<String>, Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.format_family.is_some()) {
        let key = group_by.iter().map(|g| g.value(r)).collect();
        groups.entry(key).or_default().push(r);
    }
    if groups.is_empty() {
        return Err(AnalysisError::Empty("no scored records".into()));
    }
    Ok(groups
        .into_iter()
        .map(|(key, rs)| {
            let (preds, labels) = parsed_pairs(&rs);
            let cells = rs.len();
            let failures = cells - preds.len();
            CorrelationReport {
                key: group_by.iter().copied().zip(key).collect(),
                rho: spearman(&preds, &labels).ok(),
                r: pearson(&preds, &labels).ok(),
                mse: mse(&preds, &labels).ok(),
                n: preds.len(),
                cells,
                parse_failures: failures,
                failure_rate: failures as f64 / cells as f64,
            }
        })
        .collect())
}

pub(crate) fn parsed_pairs(rs: &[&RunRecord]) -> (Vec<f64>, Vec<f64>) {
    rs.iter()
        .filter_map(|r| Some((r.normalized_value?, r.human_label)))
        .unzip()
}

/// One cell of the per-format table: a model family's Spearman
/// correlation for a format family, averaged over benchmarks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormatTableCell {
    pub size: String,
    pub model_family: String,
    pub format_family: Family,
    pub rho: Option<f64>,
    /// Benchmarks contributing a defined correlation.
    pub benchmarks: usize,
}

/// Per-format correlations for untreated numeric formats, grouped by
/// size class then model family, one cell per format family.
pub fn format_table(records: &[RunRecord]) -> Result<Vec<FormatTableCell>, AnalysisError> {
    type Key = (String, String, Family, String);
    let mut groups: BTreeMap<Key, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let (Some(ff), Some(Variant::Numeric)) = (r.format_family, r.variant) else {
            continue;
        };
        if r.with_newline || r.with_space {
            continue;
        }
        groups
            .entry((r.model_size.clone(), r.model_family.clone(), ff, r.benchmark.clone()))
            .or_default()
            .push(r);
    }
    if groups.is_empty() {
        return Err(AnalysisError::Empty("no untreated numeric records".into()));
    }
    let mut per_bench: BTreeMap<(String, String, Family), Vec<f64>> = BTreeMap::new();
    for ((size, fam, ff, _), rs) in &groups {
        let entry = per_bench.entry((size.clone(), fam.clone(), *ff)).or_default();
        let (p, l) = parsed_pairs(rs);
        if let Ok(rho) = spearman(&p, &l) {
            entry.push(rho);
        }
    }
    Ok(per_bench
        .into_iter()
        .map(|((size, model_family, format_family), rhos)| FormatTableCell {
            size,
            model_family,
            format_family,
            rho: (!rhos.is_empty()).then(|| mean(&rhos)),
            benchmarks: rhos.len(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::test_support::record;

    #[test]
    fn perfect_groups() {
        let mut rs = Vec::new();
        for (i, l) in [0.1, 0.5, 0.9].into_iter().enumerate() {
            rs.push(record("m", "a", &format!("i{i}"), Family::Real, Some(l), l));
            rs.push(record("m", "b", &format!("i{i}"), Family::Real, Some(1.0 - l), l));
        }
        let t = correlation_table(&rs, &[GroupBy::Benchmark]).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].rho, Some(1.0));
        assert_eq!(t[1].rho, Some(-1.0));
        assert_eq!(t[0].mse, Some(0.0));
    }

    #[test]
    fn failures_are_counted_not_correlated() {
        let rs = vec![
            record("m", "a", "1", Family::Real, Some(0.1), 0.1),
            record("m", "a", "2", Family::Real, Some(0.2), 0.2),
            record("m", "a", "3", Family::Real, None, 0.3),
        ];
        let t = correlation_table(&rs, &[]).unwrap();
        assert_eq!((t[0].n, t[0].cells, t[0].parse_failures), (2, 3, 1));
        assert!((t[0].failure_rate - 1.0 / 3.0).abs() < 1e-15);
    }
}
