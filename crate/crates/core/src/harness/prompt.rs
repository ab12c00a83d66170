//! Prompt templates.
//!
//! Every scored benchmark shares one template; only the statement and the
//! response instruction vary. The instruction follows the output format,
//! not the benchmark.

use super::{BenchmarkItem, BenchmarkKind, HarnessError};
use crate::formats::numerals::cardinal;
use crate::formats::{ChoiceFormat, ChoiceStyle, Family, FormatSpec, RealRange, Variant, LIKERT_PHRASES};

fn statement(kind: BenchmarkKind) -> Option<&'static str> {
    match kind {
        BenchmarkKind::Stsb | BenchmarkKind::Men => Some("These strings are similar."),
        BenchmarkKind::Qqp => Some("These strings are duplicates."),
        BenchmarkKind::Toxicchat => Some("These strings contain toxic language."),
        BenchmarkKind::MultipleChoice => None,
    }
}

/// The response instruction for a format.
pub fn instruction(spec: &FormatSpec) -> String {
    let max = spec.options.integer_max;
    match (spec.family, spec.variant) {
        (Family::Integer, Variant::Numeric) => {
            format!("Respond only with a number between 1 and {max}.")
        }
        (Family::Integer, Variant::Word) => format!(
            "Respond only with a number between One and {}, written in words.",
            crate::formats::numerals::capitalize(&cardinal(max))
        ),
        (Family::Real, Variant::Numeric) => match spec.options.real_range {
            RealRange::Hundredths => "Respond only with a number between 0 and 1.".to_string(),
            RealRange::Tenths => {
                "Respond only with a number between 0.1 and 1, in steps of 0.1.".to_string()
            }
        },
        (Family::Real, Variant::Word) => {
            "Respond only with a number between Zero point zero and One, written in words."
                .to_string()
        }
        (Family::Percent, Variant::Numeric) => {
            "Respond only with a percentage between 0% and 100%.".to_string()
        }
        (Family::Percent, Variant::Word) => {
            "Respond only with a percentage between Zero percent and One hundred percent, written in words."
                .to_string()
        }
        (Family::Binary, Variant::Numeric) => "Respond only with '1' or '0'.".to_string(),
        (Family::Binary, Variant::Word) => "Respond only with 'True' or 'False'.".to_string(),
        (Family::Likert, Variant::Numeric) => {
            let mut s = String::from("Respond only with a number between 1 and 5, where");
            for (i, phrase) in LIKERT_PHRASES.iter().enumerate() {
                let sep = if i + 1 < LIKERT_PHRASES.len() { "," } else { "" };
                s.push_str(&format!("\n{} = {phrase}{sep}", i + 1));
            }
            s
        }
        (Family::Likert, Variant::Word) => {
            let quoted: Vec<String> = LIKERT_PHRASES.iter().map(|p| format!("'{p}'")).collect();
            format!(
                "Respond only with {} or {}.",
                quoted[..quoted.len() - 1].join(", "),
                quoted[quoted.len() - 1]
            )
        }
    }
}

/// Scored-benchmark prompt for `item` asking for an answer in `spec`.
pub fn render_prompt(item: &BenchmarkItem, spec: &FormatSpec) -> Result<String, HarnessError> {
    let Some(statement) = statement(item.kind) else {
        return Err(HarnessError::Incompatible(format!(
            "{} items need a choice format, not {}",
            item.kind,
            spec.id()
        )));
    };
    Ok(format!(
        "<string 1>{}</string 1>\n\n<string 2>{}</string 2>\n\nRate your agreement with the following statement: {statement}\n\n{}",
        item.text_a,
        item.text_b,
        instruction(spec)
    ))
}

/// Multiple-choice prompt: the question, one labelled line per choice, then
/// the instruction.
pub fn render_choice_prompt(
    item: &BenchmarkItem,
    format: &ChoiceFormat,
) -> Result<String, HarnessError> {
    if !item.kind.is_multiple_choice() {
        return Err(HarnessError::Incompatible(format!(
            "{} items cannot use choice format {}",
            item.kind,
            format.id()
        )));
    }
    if item.choices.len() != format.arity() {
        return Err(HarnessError::Incompatible(format!(
            "item {} has {} choices, format built for {}",
            item.id,
            item.choices.len(),
            format.arity()
        )));
    }
    let mut out = format!("{}\n", item.text_a);
    for (label, choice) in format.surfaces().iter().zip(&item.choices) {
        out.push_str(&format!("\n{label}. {choice}"));
    }
    let what = match format.style {
        ChoiceStyle::Stock => "letter",
        ChoiceStyle::AsInteger | ChoiceStyle::AsReal => "number",
        ChoiceStyle::AsWord => "label",
    };
    out.push_str(&format!(
        "\n\nRespond only with the {what} of the correct answer."
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{build_choice_format, build_format, FormatOptions, Treatments};
    use crate::harness::bench::parse_benchmark;

    fn item(kind: BenchmarkKind, a: &str, b: &str) -> BenchmarkItem {
        BenchmarkItem {
            id: "x".into(),
            kind,
            text_a: a.into(),
            text_b: b.into(),
            label: 0.0,
            raw_label: 0.0,
            source_range: kind.source_range(),
            choices: vec![],
            gold: None,
        }
    }

    fn spec(f: Family, v: Variant) -> FormatSpec {
        build_format(f, v, Treatments::NONE, FormatOptions::default()).unwrap()
    }

    #[test]
    fn binary_word_instruction() {
        let p = render_prompt(
            &item(BenchmarkKind::Qqp, "a", "b"),
            &spec(Family::Binary, Variant::Word),
        )
        .unwrap();
        assert!(p.ends_with("These strings are duplicates.\n\nRespond only with 'True' or 'False'."));
    }

    #[test]
    fn likert_word_lists_all_phrases() {
        let s = instruction(&spec(Family::Likert, Variant::Word));
        assert_eq!(
            s,
            "Respond only with 'Strongly disagree', 'Disagree', 'Neither agree nor disagree', 'Agree' or 'Strongly agree'."
        );
    }

    #[test]
    fn mc_rejects_scored_formats() {
        let mc = parse_benchmark(
            r#"{"question": "q?", "choices": ["x", "y"], "gold": 0}"#,
            BenchmarkKind::MultipleChoice,
            false,
        )
        .unwrap()
        .items
        .remove(0);
        assert!(render_prompt(&mc, &spec(Family::Real, Variant::Numeric)).is_err());
        let f = build_choice_format(ChoiceStyle::Stock, Treatments::NONE, 2).unwrap();
        assert_eq!(
            render_choice_prompt(&mc, &f).unwrap(),
            "q?\n\nA. x\nB. y\n\nRespond only with the letter of the correct answer."
        );
        let f3 = build_choice_format(ChoiceStyle::Stock, Treatments::NONE, 3).unwrap();
        assert!(render_choice_prompt(&mc, &f3).is_err());
    }
}
