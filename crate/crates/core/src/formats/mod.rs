//! Output-format grammars and their surface -> value maps.
//!
//! A [`FormatSpec`] is one family x variant x treatment combination. The
//! grammar accepts exactly the (prefixed) surfaces of its value map, which
//! is what makes the parsed value of a constrained generation well defined.

mod choice;
pub mod numerals;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use choice::{build_choice_format, ChoiceFormat, ChoiceStyle};
use numerals::{capitalize, cardinal};

use crate::vocab::Vocabulary;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("output {0:?} is not a surface of this format")]
    Unmapped(String),
    #[error("choice arity {0} outside 2..=26")]
    Arity(usize),
    #[error("integer range maximum {0} outside 1..=100")]
    IntegerRange(u32),
    #[error("surface {0:?} cannot be spelled with this vocabulary")]
    Unencodable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Integer,
    Real,
    Percent,
    Binary,
    Likert,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Integer,
        Family::Real,
        Family::Percent,
        Family::Binary,
        Family::Likert,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Integer => "integer",
            Family::Real => "real",
            Family::Percent => "percent",
            Family::Binary => "binary",
            Family::Likert => "likert",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown format family `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Numeric,
    Word,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Numeric, Variant::Word];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Numeric => "numeric",
            Variant::Word => "word",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

/// Leading-whitespace treatments. The newline comes before the space when
/// both are set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Treatments {
    pub with_newline: bool,
    pub with_space: bool,
}

impl Treatments {
    pub const NONE: Treatments = Treatments {
        with_newline: false,
        with_space: false,
    };

    pub const ALL: [Treatments; 4] = [
        Treatments::NONE,
        Treatments {
            with_newline: false,
            with_space: true,
        },
        Treatments {
            with_newline: true,
            with_space: false,
        },
        Treatments {
            with_newline: true,
            with_space: true,
        },
    ];

    /// Text emitted before the surface.
    pub fn prefix(self) -> &'static str {
        match (self.with_newline, self.with_space) {
            (false, false) => "",
            (false, true) => " ",
            (true, false) => "\n",
            (true, true) => "\n ",
        }
    }

    /// `_space`, `_newline` or both, in that order.
    pub fn suffix(self) -> String {
        let mut s = String::new();
        if self.with_space {
            s.push_str("_space");
        }
        if self.with_newline {
            s.push_str("_newline");
        }
        s
    }

    fn root_rule(self) -> String {
        let mut rhs = String::new();
        if self.with_newline {
            rhs.push_str("\"\\n\" ");
        }
        if self.with_space {
            rhs.push_str("\" \" ");
        }
        format!("root ::= {rhs}response")
    }
}

impl std::str::FromStr for Treatments {
    type Err = String;
    /// `none`, `space`, `newline`, or `space+newline`.
    fn from_str(s: &str) -> Result<Self, String> {
        let mut t = Treatments::NONE;
        if s == "none" || s.is_empty() {
            return Ok(t);
        }
        for part in s.split('+') {
            match part.trim() {
                "space" | "with_space" => t.with_space = true,
                "newline" | "with_newline" => t.with_newline = true,
                other => return Err(format!("unknown treatment `{other}`")),
            }
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealRange {
    /// `"0.00"` to `"0.99"`.
    #[default]
    Hundredths,
    /// `"0.1"` to `"0.9"` and `"1"`.
    Tenths,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct FormatOptions {
    /// Largest value of the integer family; the range starts at 1.
    pub integer_max: u32,
    pub real_range: RealRange,
}

impl Default for FormatOptions {
    fn default() -> Self {
        FormatOptions {
            integer_max: 10,
            real_range: RealRange::Hundredths,
        }
    }
}

pub const LIKERT_PHRASES: [&str; 5] = [
    "Strongly disagree",
    "Disagree",
    "Neither agree nor disagree",
    "Agree",
    "Strongly agree",
];

/// One output format: grammar plus the exact surface -> value map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormatSpec {
    pub family: Family,
    pub variant: Variant,
    pub treatments: Treatments,
    pub options: FormatOptions,
    gbnf: String,
    /// Un-prefixed surfaces in ascending value order.
    value_map: Vec<(String, f64)>,
    max_tokens: usize,
}

impl FormatSpec {
    /// `<family>_<variant>[_space][_newline]`
    pub fn id(&self) -> String {
        format!("{}_{}{}", self.family, self.variant, self.treatments.suffix())
    }

    pub fn gbnf(&self) -> &str {
        &self.gbnf
    }

    pub fn value_map(&self) -> &[(String, f64)] {
        &self.value_map
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.value_map.iter().map(|(s, _)| s.as_str())
    }

    /// Surfaces as the model must emit them, treatment prefix included.
    pub fn emitted_surfaces(&self) -> Vec<String> {
        let p = self.treatments.prefix();
        self.surfaces().map(|s| format!("{p}{s}")).collect()
    }

    /// Byte-length upper bound on the token budget; exact for vocabularies
    /// with every single byte as a token. See [`token_budget`].
    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    /// Value of a generated surface. Leading whitespace is stripped first.
    pub fn value_of(&self, output: &str) -> Result<f64, FormatError> {
        let key = output.trim_start();
        self.value_map
            .iter()
            .find(|(s, _)| s == key)
            .map(|&(_, v)| v)
            .ok_or_else(|| FormatError::Unmapped(output.to_string()))
    }

    /// Smallest and largest values of the map.
    pub fn value_range(&self) -> (f64, f64) {
        let lo = self.value_map.first().map_or(0.0, |e| e.1);
        let hi = self.value_map.last().map_or(0.0, |e| e.1);
        (lo, hi)
    }
}

fn quoted_alternation<'a>(surfaces: impl Iterator<Item = &'a str>) -> String {
    surfaces
        .map(|s| format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")))
        .collect::<Vec<_>>()
        .join(" | ")
}

fn surfaces_for(family: Family, variant: Variant, opts: &FormatOptions) -> Vec<(String, f64)> {
    use Family::*;
    use Variant::*;
    match (family, variant) {
        (Integer, Numeric) => (1..=opts.integer_max).map(|k| (k.to_string(), k as f64)).collect(),
        (Integer, Word) => (1..=opts.integer_max)
            .map(|k| (capitalize(&cardinal(k)), k as f64))
            .collect(),
        (Real, Numeric) => match opts.real_range {
            RealRange::Hundredths => (0..100).map(|k| (format!("0.{k:02}"), k as f64 / 100.0)).collect(),
            RealRange::Tenths => (1..=9)
                .map(|k| (format!("0.{k}"), k as f64 / 10.0))
                .chain(std::iter::once(("1".to_string(), 1.0)))
                .collect(),
        },
        (Real, Word) => (0..=9)
            .map(|k| (format!("Zero point {}", cardinal(k)), k as f64 / 10.0))
            .chain(std::iter::once(("One".to_string(), 1.0)))
            .collect(),
        (Percent, Numeric) => (0..=100).map(|k| (format!("{k}%"), k as f64 / 100.0)).collect(),
        (Percent, Word) => (0..=100)
            .map(|k| (format!("{} percent", capitalize(&cardinal(k))), k as f64 / 100.0))
            .collect(),
        (Binary, Numeric) => vec![("0".into(), 0.0), ("1".into(), 1.0)],
        (Binary, Word) => vec![("False".into(), 0.0), ("True".into(), 1.0)],
        (Likert, Numeric) => (1..=5).map(|k| (k.to_string(), k as f64)).collect(),
        (Likert, Word) => LIKERT_PHRASES
            .iter()
            .zip(1..)
            .map(|(s, k)| (s.to_string(), k as f64))
            .collect(),
    }
}

fn response_body(family: Family, variant: Variant, opts: &FormatOptions, map: &[(String, f64)]) -> String {
    match (family, variant) {
        (Family::Likert, Variant::Numeric) => "[1-5]".to_string(),
        (Family::Real, Variant::Numeric) if opts.real_range == RealRange::Hundredths => {
            "\"0.\"[0-9][0-9]".to_string()
        }
        (Family::Binary, Variant::Numeric) => "\"1\" | \"0\"".to_string(),
        (Family::Binary, Variant::Word) => "\"True\" | \"False\"".to_string(),
        _ => quoted_alternation(map.iter().map(|(s, _)| s.as_str())),
    }
}

pub fn build_format(
    family: Family,
    variant: Variant,
    treatments: Treatments,
    options: FormatOptions,
) -> Result<FormatSpec, FormatError> {
    if !(1..=100).contains(&options.integer_max) {
        return Err(FormatError::IntegerRange(options.integer_max));
    }
    let value_map = surfaces_for(family, variant, &options);
    let gbnf = format!(
        "{}\nresponse ::= {}",
        treatments.root_rule(),
        response_body(family, variant, &options, &value_map)
    );
    let prefix_len = treatments.prefix().len();
    let max_tokens = value_map
        .iter()
        .map(|(s, _)| s.len() + prefix_len)
        .max()
        .unwrap_or(1);
    Ok(FormatSpec {
        family,
        variant,
        treatments,
        options,
        gbnf,
        value_map,
        max_tokens,
    })
}

/// The full grid: 5 families x 2 variants x 4 treatment combinations.
pub fn all_formats(options: FormatOptions) -> Result<Vec<FormatSpec>, FormatError> {
    let mut out = Vec::with_capacity(40);
    for family in Family::ALL {
        for variant in Variant::ALL {
            for t in Treatments::ALL {
                out.push(build_format(family, variant, t, options)?);
            }
        }
    }
    Ok(out)
}

/// Most tokens any surface needs under `vocab`, using the shortest
/// segmentation of the prefixed surface; a leading newline counts as one
/// extra token.
pub fn token_budget(spec: &FormatSpec, vocab: &Vocabulary) -> Result<usize, FormatError> {
    let space = if spec.treatments.with_space { " " } else { "" };
    let mut worst = 0;
    for s in spec.surfaces() {
        let text = format!("{space}{s}");
        let n = vocab
            .min_token_count(&text)
            .ok_or_else(|| FormatError::Unencodable(text.clone()))?;
        worst = worst.max(n);
    }
    Ok(worst + usize::from(spec.treatments.with_newline))
}
