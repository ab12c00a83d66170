//! Treatment deltas: how a treatment shifts each model family's Spearman
//! correlation, averaged over matched benchmark/format cells.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::correlate::parsed_pairs;
use super::stats::{mean, spearman};
use super::AnalysisError;
use crate::formats::{Family, Variant};
use crate::harness::RunRecord;

/// Correlation of one (family, size, benchmark, format, treatment) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRho {
    pub model_family: String,
    pub size: String,
    pub benchmark: String,
    pub format_family: Family,
    pub variant: Variant,
    pub with_newline: bool,
    pub with_space: bool,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    WithNewline,
    WithSpace,
    AsWord,
    AsLarge,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::WithNewline,
        Condition::WithSpace,
        Condition::AsWord,
        Condition::AsLarge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::WithNewline => "with_newline",
            Condition::WithSpace => "with_space",
            Condition::AsWord => "as_word",
            Condition::AsLarge => "as_large",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRow {
    pub condition: Condition,
    /// One entry per family, in [`DeltaTable::families`] order; `None` when
    /// no matched pair exists.
    pub deltas: Vec<Option<f64>>,
    pub pairs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaTable {
    pub families: Vec<String>,
    pub rows: Vec<DeltaRow>,
    /// Mean of the condition deltas per family; `None` if any is missing.
    pub mean: Vec<Option<f64>>,
}

/// Size tags compared by the `as_large` condition.
pub const SMALL: &str = "small";
pub const LARGE: &str = "large";

/// Spearman per cell over scored records; undefined cells are dropped.
pub fn cell_rhos(records: &[RunRecord]) -> Vec<CellRho> {
    type Key = (String, String, String, Family, Variant, bool, bool);
    let mut groups: BTreeMap<Key, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let (Some(ff), Some(v)) = (r.format_family, r.variant) else {
            continue;
        };
        groups
            .entry((
                r.model_family.clone(),
                r.model_size.clone(),
                r.benchmark.clone(),
                ff,
                v,
                r.with_newline,
                r.with_space,
            ))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .filter_map(|((fam, size, bench, ff, v, nl, sp), rs)| {
            let (p, l) = parsed_pairs(&rs);
            Some(CellRho {
                model_family: fam,
                size,
                benchmark: bench,
                format_family: ff,
                variant: v,
                with_newline: nl,
                with_space: sp,
                rho: spearman(&p, &l).ok()?,
            })
        })
        .collect()
}

/// Arm membership and the key that pairs treated with untreated cells.
fn arm(c: &CellRho, cond: Condition) -> Option<(bool, (String, String, Family, Variant))> {
    let untreated = !c.with_newline && !c.with_space;
    let key = |size: &str, v: Variant| Some((size.to_string(), c.benchmark.clone(), c.format_family, v));
    match cond {
        Condition::WithNewline => {
            if c.with_space {
                return None;
            }
            Some((c.with_newline, key(&c.size, c.variant)?))
        }
        Condition::WithSpace => {
            if c.with_newline {
                return None;
            }
            Some((c.with_space, key(&c.size, c.variant)?))
        }
        Condition::AsWord if untreated => {
            Some((c.variant == Variant::Word, key(&c.size, Variant::Numeric)?))
        }
        Condition::AsLarge if untreated => match c.size.as_str() {
            LARGE => Some((true, key("", c.variant)?)),
            SMALL => Some((false, key("", c.variant)?)),
            _ => None,
        },
        _ => None,
    }
}

pub fn deltas_from_cells(cells: &[CellRho]) -> Result<DeltaTable, AnalysisError> {
    let mut families: Vec<String> = cells.iter().map(|c| c.model_family.clone()).collect();
    families.sort();
    families.dedup();
    if families.is_empty() {
        return Err(AnalysisError::Empty("no correlation cells".into()));
    }
    let mut rows = Vec::new();
    for cond in Condition::ALL {
        let mut deltas = Vec::new();
        let mut pairs = Vec::new();
        for fam in &families {
            let mut with = BTreeMap::new();
            let mut without = BTreeMap::new();
            for c in cells.iter().filter(|c| &c.model_family == fam) {
                if let Some((treated, key)) = arm(c, cond) {
                    if treated {
                        with.insert(key, c.rho);
                    } else {
                        without.insert(key, c.rho);
                    }
                }
            }
            let diffs: Vec<f64> = with
                .iter()
                .filter_map(|(k, w)| Some(w - without.get(k)?))
                .collect();
            pairs.push(diffs.len());
            deltas.push((!diffs.is_empty()).then(|| mean(&diffs)));
        }
        rows.push(DeltaRow {
            condition: cond,
            deltas,
            pairs,
        });
    }
    if rows.iter().all(|r| r.deltas.iter().all(Option::is_none)) {
        return Err(AnalysisError::MissingArm(
            "no condition has both arms".into(),
        ));
    }
    let mean_row = (0..families.len())
        .map(|i| {
            let vals: Option<Vec<f64>> = rows.iter().map(|r| r.deltas[i]).collect();
            vals.map(|v| mean(&v))
        })
        .collect();
    Ok(DeltaTable {
        families,
        rows,
        mean: mean_row,
    })
}

pub fn treatment_deltas(records: &[RunRecord]) -> Result<DeltaTable, AnalysisError> {
    deltas_from_cells(&cell_rhos(records))
}
