//! Format grid: treatments change the spelling, never the value.

use gcd_audit::formats::{
    all_formats, build_choice_format, build_format, ChoiceStyle, Family, FormatOptions,
    RealRange, Treatments, Variant,
};
use gcd_audit::grammar::compile_gbnf;
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

fn variant() -> impl Strategy<Value = Variant> {
    prop::sample::select(Variant::ALL.to_vec())
}

fn treatments() -> impl Strategy<Value = Treatments> {
    prop::sample::select(Treatments::ALL.to_vec())
}

proptest! {
    #[test]
    fn treatment_is_value_neutral(
        f in family(),
        v in variant(),
        t in treatments(),
        integer_max in 1u32..=100,
        tenths in any::<bool>(),
        pick in any::<prop::sample::Index>(),
    ) {
        let opts = FormatOptions {
            integer_max,
            real_range: if tenths { RealRange::Tenths } else { RealRange::Hundredths },
        };
        let plain = build_format(f, v, Treatments::NONE, opts).unwrap();
        let treated = build_format(f, v, t, opts).unwrap();
        prop_assert_eq!(plain.value_map(), treated.value_map());
        let emitted = treated.emitted_surfaces();
        let i = pick.index(emitted.len());
        let g = compile_gbnf(treated.gbnf()).unwrap();
        prop_assert!(g.validate_output(&emitted[i]));
        prop_assert_eq!(treated.value_of(&emitted[i]).unwrap(), plain.value_map()[i].1);
        if t != Treatments::NONE {
            // The bare surface is not a sentence of a treated grammar.
            prop_assert!(!g.validate_output(&plain.value_map()[i].0));
        }
    }

    #[test]
    fn choice_formats_round_trip(
        style in prop::sample::select(ChoiceStyle::ALL.to_vec()),
        t in treatments(),
        n in 2usize..=26,
        pick in any::<prop::sample::Index>(),
    ) {
        let c = build_choice_format(style, t, n).unwrap();
        let g = compile_gbnf(c.gbnf()).unwrap();
        let k = pick.index(n);
        let out = format!("{}{}", t.prefix(), c.surfaces()[k]);
        prop_assert!(g.validate_output(&out));
        prop_assert_eq!(c.choice_index(&out).unwrap(), k);
    }
}

#[test]
fn grid_ids_are_unique_file_names() {
    let specs = all_formats(FormatOptions::default()).unwrap();
    let mut ids: Vec<String> = specs.iter().map(|s| s.id()).collect();
    assert_eq!(ids.len(), 40);
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 40);
    assert!(ids.contains(&"real_numeric_space_newline".to_string()));
}
