//! Plain tables rendered as Markdown or CSV.

use super::baseline::BaselineReport;
use super::choices::{ChoiceTable, Column};
use super::correlate::{CorrelationReport, FormatTableCell};
use super::deltas::DeltaTable;
use super::matrix::AgreementMatrix;
use crate::formats::Family;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn num(v: Option<f64>, places: usize) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.places$}"))
}

fn signed(v: Option<f64>, places: usize) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:+.places$}"))
}

impl Table {
    pub fn new(headers: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_markdown(&self) -> String {
        let esc = |s: &String| s.replace('|', "\\|");
        let mut out = String::new();
        out.push_str(&format!(
            "| {} |\n",
            self.headers.iter().map(esc).collect::<Vec<_>>().join(" | ")
        ));
        out.push_str(&format!("|{}\n", "---|".repeat(self.headers.len())));
        for r in &self.rows {
            out.push_str(&format!("| {} |\n", r.iter().map(esc).collect::<Vec<_>>().join(" | ")));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        // Writing to memory cannot fail.
        w.write_record(&self.headers).expect("in-memory csv");
        for r in &self.rows {
            w.write_record(r).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }
}

pub fn correlation_rows(reports: &[CorrelationReport]) -> Table {
    let mut t = Table::new(
        reports
            .first()
            .map(|r| r.key.iter().map(|(g, _)| g.name().to_string()).collect::<Vec<_>>())
            .unwrap_or_default()
            .into_iter()
            .chain(["rho", "r", "mse", "n", "cells", "parse_failures", "failure_rate"].map(String::from)),
    );
    for r in reports {
        let mut row: Vec<String> = r.key.iter().map(|(_, v)| v.clone()).collect();
        row.extend([
            num(r.rho, 3),
            num(r.r, 3),
            num(r.mse, 4),
            r.n.to_string(),
            r.cells.to_string(),
            r.parse_failures.to_string(),
            format!("{:.4}", r.failure_rate),
        ]);
        t.push(row);
    }
    t
}

/// One row per (size, model family), one column per format family.
pub fn format_rows(cells: &[FormatTableCell]) -> Table {
    let mut t = Table::new(
        ["size", "model_family"]
            .into_iter()
            .map(String::from)
            .chain(Family::ALL.iter().map(|f| f.name().to_string())),
    );
    let mut keys: Vec<(&str, &str)> = cells
        .iter()
        .map(|c| (c.size.as_str(), c.model_family.as_str()))
        .collect();
    keys.dedup();
    for (size, fam) in keys {
        let mut row = vec![size.to_string(), fam.to_string()];
        for f in Family::ALL {
            let rho = cells
                .iter()
                .find(|c| c.size == size && c.model_family == fam && c.format_family == f)
                .and_then(|c| c.rho);
            row.push(num(rho, 2));
        }
        t.push(row);
    }
    t
}

pub fn delta_rows(table: &DeltaTable) -> Table {
    let mut t = Table::new(std::iter::once("condition".to_string()).chain(table.families.iter().cloned()));
    for r in &table.rows {
        t.push(
            std::iter::once(r.condition.name().to_string())
                .chain(r.deltas.iter().map(|d| signed(*d, 3)))
                .collect(),
        );
    }
    t.push(
        std::iter::once("mean".to_string())
            .chain(table.mean.iter().map(|d| signed(*d, 3)))
            .collect(),
    );
    t
}

pub fn matrix_rows(m: &AgreementMatrix) -> Table {
    let mut t = Table::new(std::iter::once("format".to_string()).chain(m.formats.iter().cloned()));
    for (f, vals) in m.formats.iter().zip(&m.values) {
        t.push(
            std::iter::once(f.clone())
                .chain(vals.iter().map(|v| num(*v, 2)))
                .collect(),
        );
    }
    t
}

/// Accuracy per column, with the change against stock in parentheses.
pub fn choice_rows(table: &ChoiceTable) -> Table {
    let mut t = Table::new(
        std::iter::once("benchmark".to_string()).chain(Column::ALL.iter().map(|c| c.title().to_string())),
    );
    for row in table.rows.iter().chain(std::iter::once(&table.mean)) {
        let mut out = vec![row.benchmark.clone()];
        for c in Column::ALL {
            out.push(match row.cells.get(&c) {
                None => "NA".into(),
                Some(cell) if c == Column::Stock => cell.shown.to_string(),
                Some(cell) => match cell.change {
                    Some(ch) => format!("{} ({ch:+})", cell.shown),
                    None => cell.shown.to_string(),
                },
            });
        }
        t.push(out);
    }
    t
}

pub fn baseline_rows(reports: &[BaselineReport]) -> Table {
    let mut t = Table::new(["benchmark", "method", "n", "r", "rho", "mse"]);
    for r in reports {
        t.push(vec![
            r.benchmark.clone(),
            r.method.clone(),
            r.n.to_string(),
            num(r.r, 3),
            num(r.rho, 3),
            num(r.mse, 4),
        ]);
    }
    t
}
