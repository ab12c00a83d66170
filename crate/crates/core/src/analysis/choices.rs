//! Multiple-choice accuracy per labelling style and treatment.
//!
//! Accuracies are shown as whole percentages, and the change against the
//! stock column is computed from those displayed values:
//! `round((acc - stock) / stock * 100)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::stats::mean;
use super::AnalysisError;
use crate::formats::ChoiceStyle;
use crate::harness::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Stock,
    WithNewline,
    WithSpace,
    AsInteger,
    AsReal,
    AsWord,
}

impl Column {
    pub const ALL: [Column; 6] = [
        Column::Stock,
        Column::WithNewline,
        Column::WithSpace,
        Column::AsInteger,
        Column::AsReal,
        Column::AsWord,
    ];

    pub fn title(self) -> &'static str {
        match self {
            Column::Stock => "Stock",
            Column::WithNewline => "With Newline",
            Column::WithSpace => "With Space",
            Column::AsInteger => "As Integer",
            Column::AsReal => "As Real",
            Column::AsWord => "As Word",
        }
    }

    fn of(style: ChoiceStyle, with_newline: bool, with_space: bool) -> Option<Column> {
        match (style, with_newline, with_space) {
            (ChoiceStyle::Stock, false, false) => Some(Column::Stock),
            (ChoiceStyle::Stock, true, false) => Some(Column::WithNewline),
            (ChoiceStyle::Stock, false, true) => Some(Column::WithSpace),
            (ChoiceStyle::AsInteger, false, false) => Some(Column::AsInteger),
            (ChoiceStyle::AsReal, false, false) => Some(Column::AsReal),
            (ChoiceStyle::AsWord, false, false) => Some(Column::AsWord),
            _ => None,
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.title())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChoiceCell {
    /// Percentage of cells answered correctly.
    pub accuracy: f64,
    /// Whole-percent display value.
    pub shown: i64,
    /// Percent change of `shown` against the stock column's `shown`.
    pub change: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChoiceRow {
    pub benchmark: String,
    pub cells: BTreeMap<Column, ChoiceCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChoiceTable {
    pub rows: Vec<ChoiceRow>,
    /// Column means of the per-benchmark accuracies.
    pub mean: ChoiceRow,
}

/// Whole-percent change of `acc` relative to `stock`, both rounded first.
pub fn percent_change(acc: f64, stock: f64) -> Option<i64> {
    let (a, s) = (acc.round(), stock.round());
    if s == 0.0 {
        return None;
    }
    Some(((a - s) / s * 100.0).round() as i64)
}

fn row(benchmark: String, accs: &BTreeMap<Column, f64>) -> Result<ChoiceRow, AnalysisError> {
    let stock = *accs.get(&Column::Stock).ok_or_else(|| {
        AnalysisError::MissingArm(format!("benchmark {benchmark:?} has no stock column"))
    })?;
    let cells = accs
        .iter()
        .map(|(&c, &a)| {
            (
                c,
                ChoiceCell {
                    accuracy: a,
                    shown: a.round() as i64,
                    change: percent_change(a, stock),
                },
            )
        })
        .collect();
    Ok(ChoiceRow { benchmark, cells })
}

impl ChoiceTable {
    /// Builds the table from per-benchmark accuracies in percent.
    pub fn from_accuracies(
        rows: Vec<(String, BTreeMap<Column, f64>)>,
    ) -> Result<ChoiceTable, AnalysisError> {
        if rows.is_empty() {
            return Err(AnalysisError::Empty("no multiple-choice benchmarks".into()));
        }
        let mut by_col: BTreeMap<Column, Vec<f64>> = BTreeMap::new();
        for (_, accs) in &rows {
            for (&c, &a) in accs {
                by_col.entry(c).or_default().push(a);
            }
        }
        let means: BTreeMap<Column, f64> = by_col.into_iter().map(|(c, v)| (c, mean(&v))).collect();
        let built = rows
            .into_iter()
            .map(|(b, accs)| row(b, &accs))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ChoiceTable {
            rows: built,
            mean: row("mean".into(), &means)?,
        })
    }
}

/// Accuracy table from multiple-choice records. Unparsed outputs count as
/// wrong.
pub fn choice_accuracy(records: &[RunRecord]) -> Result<ChoiceTable, AnalysisError> {
    let mut tally: BTreeMap<String, BTreeMap<Column, (usize, usize)>> = BTreeMap::new();
    for r in records {
        let Some(style) = r.choice_style else { continue };
        let Some(col) = Column::of(style, r.with_newline, r.with_space) else {
            continue;
        };
        let t = tally
            .entry(r.benchmark.clone())
            .or_default()
            .entry(col)
            .or_insert((0, 0));
        t.0 += usize::from(r.correct() == Some(true));
        t.1 += 1;
    }
    let rows = tally
        .into_iter()
        .map(|(b, cols)| {
            let accs = cols
                .into_iter()
                .map(|(c, (ok, n))| (c, ok as f64 / n as f64 * 100.0))
                .collect();
            (b, accs)
        })
        .collect();
    ChoiceTable::from_accuracies(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn change_arithmetic() {
        assert_eq!(percent_change(100.0, 100.0), Some(0));
        assert_eq!(percent_change(40.0, 50.0), Some(-20));
        assert_eq!(percent_change(67.0, 49.0), Some(37));
        assert_eq!(percent_change(10.0, 0.0), None);
    }

    #[test]
    fn missing_stock_is_an_error() {
        let rows = vec![("b".to_string(), BTreeMap::from([(Column::AsReal, 50.0)]))];
        assert!(matches!(
            ChoiceTable::from_accuracies(rows),
            Err(AnalysisError::MissingArm(_))
        ));
    }

    #[test]
    fn stock_against_itself() {
        let rows = vec![("b".to_string(), BTreeMap::from([(Column::Stock, 100.0)]))];
        let t = ChoiceTable::from_accuracies(rows).unwrap();
        let c = &t.rows[0].cells[&Column::Stock];
        assert_eq!((c.shown, c.change), (100, Some(0)));
    }
}
