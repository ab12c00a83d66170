//! Benchmark ingestion and sampling.
//!
//! Per-kind layouts:
//!
//! - `stsb`: tab-separated `score, text_a, text_b` or `id, score, text_a,
//!   text_b`; rows with seven or more fields follow the distributed STS-B
//!   layout (score in column 5, sentences in 6 and 7). Scores span 0..=5.
//! - `men`: `word_a word_b score`, tab- or space-separated, 0..=50.
//! - `qqp`: CSV with a header naming `question1`, `question2`,
//!   `is_duplicate` and optionally `id`.
//! - `toxicchat`: JSON lines with `user_input`, `model_output`, `toxicity`
//!   and optionally `conv_id`.
//! - `multiple_choice`: JSON lines with `question`, `choices` and `gold`
//!   (or `answer`), optionally `id`.

use std::fmt;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    Stsb,
    Men,
    Qqp,
    Toxicchat,
    MultipleChoice,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 5] = [
        BenchmarkKind::Stsb,
        BenchmarkKind::Men,
        BenchmarkKind::Qqp,
        BenchmarkKind::Toxicchat,
        BenchmarkKind::MultipleChoice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::Stsb => "stsb",
            BenchmarkKind::Men => "men",
            BenchmarkKind::Qqp => "qqp",
            BenchmarkKind::Toxicchat => "toxicchat",
            BenchmarkKind::MultipleChoice => "multiple_choice",
        }
    }

    /// Range of the raw human score.
    pub fn source_range(self) -> (f64, f64) {
        match self {
            BenchmarkKind::Stsb => (0.0, 5.0),
            BenchmarkKind::Men => (0.0, 50.0),
            BenchmarkKind::Qqp | BenchmarkKind::Toxicchat => (0.0, 1.0),
            BenchmarkKind::MultipleChoice => (0.0, 25.0),
        }
    }

    pub fn is_multiple_choice(self) -> bool {
        self == BenchmarkKind::MultipleChoice
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BenchmarkKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "sts" | "stsb" | "sts-b" => Ok(BenchmarkKind::Stsb),
            "men" => Ok(BenchmarkKind::Men),
            "qqp" | "quora" => Ok(BenchmarkKind::Qqp),
            "toxicchat" | "toxic_chat" => Ok(BenchmarkKind::Toxicchat),
            "multiple_choice" | "mc" => Ok(BenchmarkKind::MultipleChoice),
            _ => Err(format!("unknown benchmark kind `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    pub id: String,
    pub kind: BenchmarkKind,
    pub text_a: String,
    /// Empty for multiple-choice items.
    pub text_b: String,
    /// Human label on [0, 1].
    pub label: f64,
    /// Label as found in the source file.
    pub raw_label: f64,
    pub source_range: (f64, f64),
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub choices: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<usize>,
}

/// A rejected row, kept when loading with `skip_bad`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BadRow {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedBenchmark {
    pub items: Vec<BenchmarkItem>,
    pub skipped: Vec<BadRow>,
}

pub fn load_benchmark(
    path: impl AsRef<Path>,
    kind: BenchmarkKind,
    skip_bad: bool,
) -> Result<LoadedBenchmark, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_benchmark(&text, kind, skip_bad).map_err(|e| match e {
        HarnessError::Malformed { line, message, .. } => HarnessError::Malformed {
            source_name: path.display().to_string(),
            line,
            message,
        },
        other => other,
    })
}

/// Parses benchmark text already in memory. Line numbers are 1-based.
pub fn parse_benchmark(
    text: &str,
    kind: BenchmarkKind,
    skip_bad: bool,
) -> Result<LoadedBenchmark, HarnessError> {
    let rows: Vec<(usize, Result<Option<BenchmarkItem>, String>)> = match kind {
        BenchmarkKind::Stsb => lines(text).map(|(n, l)| (n, parse_sts(n, l))).collect(),
        BenchmarkKind::Men => lines(text).map(|(n, l)| (n, parse_men(n, l))).collect(),
        BenchmarkKind::Toxicchat => lines(text).map(|(n, l)| (n, parse_toxic(n, l))).collect(),
        BenchmarkKind::MultipleChoice => lines(text).map(|(n, l)| (n, parse_mc(n, l))).collect(),
        BenchmarkKind::Qqp => parse_qqp(text)?,
    };
    let mut out = LoadedBenchmark::default();
    for (line, row) in rows {
        match row.and_then(|item| item.map(validate).transpose()) {
            Ok(Some(item)) => out.items.push(item),
            Ok(None) => {}
            Err(message) if skip_bad => out.skipped.push(BadRow { line, message }),
            Err(message) => {
                return Err(HarnessError::Malformed {
                    source_name: kind.name().to_string(),
                    line,
                    message,
                })
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    for item in &out.items {
        if !seen.insert(item.id.as_str()) {
            return Err(HarnessError::Malformed {
                source_name: kind.name().to_string(),
                line: 0,
                message: format!("duplicate item id {:?}", item.id),
            });
        }
    }
    Ok(out)
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn validate(item: BenchmarkItem) -> Result<BenchmarkItem, String> {
    let (lo, hi) = item.source_range;
    if !(lo..=hi).contains(&item.raw_label) {
        return Err(format!("label {} outside {lo}..={hi}", item.raw_label));
    }
    if item.text_a.trim().is_empty() {
        return Err("first text is empty".into());
    }
    if item.kind.is_multiple_choice() {
        if item.choices.len() < 2 || item.choices.len() > 26 {
            return Err(format!("{} choices, expected 2..=26", item.choices.len()));
        }
        if item.choices.iter().any(|c| c.trim().is_empty()) {
            return Err("empty choice".into());
        }
    } else if item.text_b.trim().is_empty() {
        return Err("second text is empty".into());
    }
    Ok(item)
}

fn scored(kind: BenchmarkKind, id: String, a: &str, b: &str, raw: f64) -> BenchmarkItem {
    let (lo, hi) = kind.source_range();
    BenchmarkItem {
        id,
        kind,
        text_a: a.to_string(),
        text_b: b.to_string(),
        label: (raw - lo) / (hi - lo),
        raw_label: raw,
        source_range: (lo, hi),
        choices: Vec::new(),
        gold: None,
    }
}

fn number(field: &str) -> Result<f64, String> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("expected a number, found {field:?}"))
}

fn parse_sts(line_no: usize, line: &str) -> Result<Option<BenchmarkItem>, String> {
    let f: Vec<&str> = line.split('\t').collect();
    let (id, score, a, b) = match f.len() {
        3 => (format!("stsb-{line_no}"), f[0], f[1], f[2]),
        4 => (f[0].trim().to_string(), f[1], f[2], f[3]),
        n if n >= 7 => (format!("stsb-{}", f[3].trim()), f[4], f[5], f[6]),
        n => return Err(format!("expected 3, 4 or 7+ tab-separated fields, found {n}")),
    };
    match number(score) {
        Ok(v) => Ok(Some(scored(BenchmarkKind::Stsb, id, a, b, v))),
        // A non-numeric score on the first line is a header.
        Err(_) if line_no == 1 => Ok(None),
        Err(e) => Err(e),
    }
}

fn parse_men(line_no: usize, line: &str) -> Result<Option<BenchmarkItem>, String> {
    let f: Vec<&str> = if line.contains('\t') {
        line.split('\t').collect()
    } else {
        line.split_whitespace().collect()
    };
    if f.len() != 3 {
        return Err(format!("expected 3 fields, found {}", f.len()));
    }
    match number(f[2]) {
        Ok(v) => Ok(Some(scored(
            BenchmarkKind::Men,
            format!("men-{line_no}"),
            f[0].trim(),
            f[1].trim(),
            v,
        ))),
        Err(_) if line_no == 1 => Ok(None),
        Err(e) => Err(e),
    }
}

fn flag(v: &serde_json::Value) -> Option<f64> {
    match v {
        serde_json::Value::Bool(b) => Some(f64::from(u8::from(*b))),
        serde_json::Value::Number(n) => n.as_f64(),
        serde_json::Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn id_field(v: Option<&serde_json::Value>) -> Option<String> {
    match v? {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn parse_toxic(line_no: usize, line: &str) -> Result<Option<BenchmarkItem>, String> {
    let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let text = |key: &str| {
        v.get(key)
            .and_then(|x| x.as_str())
            .ok_or_else(|| format!("missing string field `{key}`"))
    };
    let a = text("user_input")?;
    let b = text("model_output")?;
    let tox = v
        .get("toxicity")
        .and_then(flag)
        .ok_or("missing or non-numeric `toxicity`")?;
    let id = id_field(v.get("conv_id")).unwrap_or_else(|| format!("toxicchat-{line_no}"));
    Ok(Some(scored(BenchmarkKind::Toxicchat, id, a, b, tox)))
}

#[derive(Deserialize)]
struct McRow {
    id: Option<serde_json::Value>,
    question: String,
    choices: Vec<String>,
    #[serde(alias = "answer")]
    gold: usize,
}

fn parse_mc(line_no: usize, line: &str) -> Result<Option<BenchmarkItem>, String> {
    let row: McRow = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let n = row.choices.len();
    if row.gold >= n {
        return Err(format!("gold index {} out of range for {n} choices", row.gold));
    }
    let id = id_field(row.id.as_ref()).unwrap_or_else(|| format!("mc-{line_no}"));
    let hi = n.saturating_sub(1).max(1) as f64;
    Ok(Some(BenchmarkItem {
        id,
        kind: BenchmarkKind::MultipleChoice,
        text_a: row.question,
        text_b: String::new(),
        label: row.gold as f64 / hi,
        raw_label: row.gold as f64,
        source_range: (0.0, hi),
        choices: row.choices,
        gold: Some(row.gold),
    }))
}

type Rows = Vec<(usize, Result<Option<BenchmarkItem>, String>)>;

fn parse_qqp(text: &str) -> Result<Rows, HarnessError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let header_err = |message: String| HarnessError::Malformed {
        source_name: "qqp".into(),
        line: 1,
        message,
    };
    let headers = rdr.headers().map_err(|e| header_err(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(q1), Some(q2), Some(dup)) = (col("question1"), col("question2"), col("is_duplicate"))
    else {
        return Err(header_err(
            "header must name question1, question2 and is_duplicate".into(),
        ));
    };
    let id_col = col("id");
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let line = rec
            .as_ref()
            .ok()
            .and_then(|r| r.position())
            .map_or(0, |p| p.line() as usize);
        let row = match rec {
            Err(e) => Err(e.to_string()),
            Ok(r) => (|| {
                let get = |i: usize| r.get(i).ok_or_else(|| format!("missing column {}", i + 1));
                let v = number(get(dup)?)?;
                let id = match id_col {
                    Some(i) => get(i)?.trim().to_string(),
                    None => format!("qqp-{line}"),
                };
                Ok(Some(scored(BenchmarkKind::Qqp, id, get(q1)?, get(q2)?, v)))
            })(),
        };
        rows.push((line, row));
    }
    Ok(rows)
}

/// Uniform sample without replacement, returned in source order.
pub fn sample_items<T: Clone>(items: &[T], n: usize, seed: u64) -> Result<Vec<T>, HarnessError> {
    if n > items.len() {
        return Err(HarnessError::SampleTooLarge {
            requested: n,
            available: items.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, items.len(), n).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| items[i].clone()).collect())
}
