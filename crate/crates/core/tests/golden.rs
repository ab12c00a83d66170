//! Byte-exact prompts and frozen sampler output.
//!
//! Set `GCD_AUDIT_BLESS=1` to rewrite the frozen sample after an intended
//! sampler change. Prompt goldens are transcribed by hand and never
//! rewritten.

use std::path::PathBuf;

use gcd_audit::formats::{build_format, Family, FormatOptions, Treatments, Variant};
use gcd_audit::harness::{render_prompt, sample_items, BenchmarkItem, BenchmarkKind};

fn golden(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(rel)
}

fn item(kind: BenchmarkKind, a: &str, b: &str) -> BenchmarkItem {
    BenchmarkItem {
        id: "g".into(),
        kind,
        text_a: a.into(),
        text_b: b.into(),
        label: 0.5,
        raw_label: 0.5,
        source_range: kind.source_range(),
        choices: vec![],
        gold: None,
    }
}

fn check_prompt(file: &str, it: BenchmarkItem, f: Family, v: Variant, options: FormatOptions) {
    let spec = build_format(f, v, Treatments::NONE, options).unwrap();
    let got = render_prompt(&it, &spec).unwrap();
    let want = std::fs::read_to_string(golden(&format!("prompts/{file}"))).unwrap();
    assert_eq!(got, want, "{file}");
}

#[test]
fn benchmark_prompts_verbatim() {
    let d = FormatOptions::default();
    check_prompt(
        "stsb_real_numeric.txt",
        item(BenchmarkKind::Stsb, "cooking", "rice"),
        Family::Real,
        Variant::Numeric,
        d,
    );
    check_prompt(
        "men_likert_numeric.txt",
        item(
            BenchmarkKind::Men,
            "Obama praises U.S.-Latin America trade ties",
            "Obama Secret Service agents sent home",
        ),
        Family::Likert,
        Variant::Numeric,
        d,
    );
    check_prompt(
        "qqp_binary_word.txt",
        item(BenchmarkKind::Qqp, "Do ants die of old age?", "Could plants die of old age?"),
        Family::Binary,
        Variant::Word,
        d,
    );
    check_prompt(
        "toxicchat_integer_numeric.txt",
        item(
            BenchmarkKind::Toxicchat,
            "Hi, I need to write a  snippet in javascript",
            "Sure, what do you need help with?",
        ),
        Family::Integer,
        Variant::Numeric,
        FormatOptions {
            integer_max: 5,
            ..d
        },
    );
}

#[test]
fn sample_seed_17_is_frozen() {
    let toy = ["alpha", "bravo", "charlie", "delta", "echo"];
    let got = sample_items(&toy, 2, 17).unwrap();
    let got_json = serde_json::to_string(&got).unwrap() + "\n";
    let path = golden("sample_seed17.json");
    if std::env::var_os("GCD_AUDIT_BLESS").is_some() {
        std::fs::write(&path, &got_json).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap();
    assert_eq!(got_json, want);
    // Order-stable: the subset keeps input order.
    let pos: Vec<usize> = got.iter().map(|g| toy.iter().position(|t| t == g).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
}
