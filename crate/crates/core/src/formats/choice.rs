use std::fmt;

use serde::{Deserialize, Serialize};

use super::{FormatError, Treatments};

/// Labelling scheme for multiple-choice answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceStyle {
    /// `A`, `B`, ...
    Stock,
    /// `1`, `2`, ...
    AsInteger,
    /// Evenly spaced two-decimal reals over [0, 1].
    AsReal,
    /// `Choice 1`, `Choice 2`, ...
    AsWord,
}

impl ChoiceStyle {
    pub const ALL: [ChoiceStyle; 4] = [
        ChoiceStyle::Stock,
        ChoiceStyle::AsInteger,
        ChoiceStyle::AsReal,
        ChoiceStyle::AsWord,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChoiceStyle::Stock => "stock",
            ChoiceStyle::AsInteger => "as_integer",
            ChoiceStyle::AsReal => "as_real",
            ChoiceStyle::AsWord => "as_word",
        }
    }
}

impl fmt::Display for ChoiceStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ChoiceStyle {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ChoiceStyle::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown choice style `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChoiceFormat {
    pub style: ChoiceStyle,
    pub treatments: Treatments,
    surfaces: Vec<String>,
    gbnf: String,
}

impl ChoiceFormat {
    /// `<style>[_space][_newline]`; independent of arity.
    pub fn id(&self) -> String {
        format!("{}{}", self.style, self.treatments.suffix())
    }

    pub fn arity(&self) -> usize {
        self.surfaces.len()
    }

    /// Un-prefixed label of each choice, in choice order.
    pub fn surfaces(&self) -> &[String] {
        &self.surfaces
    }

    pub fn gbnf(&self) -> &str {
        &self.gbnf
    }

    /// Index of the choice a generated label names.
    pub fn choice_index(&self, output: &str) -> Result<usize, FormatError> {
        let key = output.trim_start();
        self.surfaces
            .iter()
            .position(|s| s == key)
            .ok_or_else(|| FormatError::Unmapped(output.to_string()))
    }
}

pub fn build_choice_format(
    style: ChoiceStyle,
    treatments: Treatments,
    n: usize,
) -> Result<ChoiceFormat, FormatError> {
    if !(2..=26).contains(&n) {
        return Err(FormatError::Arity(n));
    }
    let surfaces: Vec<String> = (0..n)
        .map(|i| match style {
            ChoiceStyle::Stock => char::from(b'A' + i as u8).to_string(),
            ChoiceStyle::AsInteger => (i + 1).to_string(),
            ChoiceStyle::AsReal => format!("{:.2}", i as f64 / (n - 1) as f64),
            ChoiceStyle::AsWord => format!("Choice {}", i + 1),
        })
        .collect();
    let body = surfaces
        .iter()
        .map(|s| format!("\"{s}\""))
        .collect::<Vec<_>>()
        .join(" | ");
    let gbnf = format!("{}\nresponse ::= {body}", treatments.root_rule());
    Ok(ChoiceFormat {
        style,
        treatments,
        surfaces,
        gbnf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stock_letters() {
        let c = build_choice_format(ChoiceStyle::Stock, Treatments::NONE, 4).unwrap();
        assert_eq!(c.surfaces(), ["A", "B", "C", "D"]);
        assert_eq!(c.choice_index("C").unwrap(), 2);
        assert_eq!(c.id(), "stock");
    }

    #[test]
    fn real_endpoints_and_spacing() {
        let c = build_choice_format(ChoiceStyle::AsReal, Treatments::NONE, 2).unwrap();
        assert_eq!(c.surfaces(), ["0.00", "1.00"]);
        let c = build_choice_format(ChoiceStyle::AsReal, Treatments::NONE, 4).unwrap();
        assert_eq!(c.surfaces(), ["0.00", "0.33", "0.67", "1.00"]);
    }

    #[test]
    fn word_labels_with_newline() {
        let t = Treatments { with_newline: true, with_space: false };
        let c = build_choice_format(ChoiceStyle::AsWord, t, 5).unwrap();
        assert_eq!(c.surfaces()[4], "Choice 5");
        assert!(c.gbnf().starts_with("root ::= \"\\n\" response"));
        assert_eq!(c.id(), "as_word_newline");
    }

    #[test]
    fn arity_bounds() {
        assert_eq!(
            build_choice_format(ChoiceStyle::Stock, Treatments::NONE, 1),
            Err(FormatError::Arity(1))
        );
        assert!(build_choice_format(ChoiceStyle::Stock, Treatments::NONE, 27).is_err());
        let c = build_choice_format(ChoiceStyle::Stock, Treatments::NONE, 26).unwrap();
        assert_eq!(c.surfaces()[25], "Z");
    }
}
