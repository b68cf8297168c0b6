#![allow(dead_code)]

use proptest::prelude::*;
use randsub::conditions::CheckConfig;
use randsub::lang::ensure_primitive;
use randsub::spectral::{perron_data, substitution_matrix};
use randsub::{fixtures, specfile, Alphabet, BoundSubstitution, Caps};

/// Every bundled fixture at its default binding.
pub fn all_fixtures() -> Vec<(&'static str, BoundSubstitution)> {
    fixtures::names()
        .map(|n| (n, fixtures::load(n).unwrap().bind_defaults().unwrap()))
        .collect()
}

pub fn from_spec(text: &str) -> BoundSubstitution {
    specfile::parse_spec(text).unwrap().bind_defaults().unwrap()
}

/// a -> {aab, abb}, b -> {aba, bba}: constant length 3, recognisable.
pub fn marker() -> BoundSubstitution {
    from_spec("alphabet: a b\nrule a -> \"aab\" : 1/2 | \"abb\" : 1/2\nrule b -> \"aba\" : 1/2 | \"bba\" : 1/2\n")
}

/// a -> ab, b -> {aa, ba}: constant length 2, recognisable.
pub fn doubling_variant() -> BoundSubstitution {
    from_spec("alphabet: a b\nrule a -> \"ab\" : 1\nrule b -> \"aa\" : 1/2 | \"ba\" : 1/2\n")
}

/// Check depths that skip the recognisability search.
pub fn quick_config() -> CheckConfig {
    CheckConfig {
        r_max: 0,
        ..CheckConfig::default()
    }
}

pub fn caps() -> Caps {
    Caps::default()
}

pub fn word(sub: &BoundSubstitution, text: &str) -> randsub::Word {
    sub.alphabet().parse_word(text).unwrap()
}

pub fn render(sub: &BoundSubstitution, w: &[randsub::Letter]) -> String {
    sub.alphabet().render(w)
}

/// Random primitive, expanding substitutions on two or three letters with
/// one to three realisations of length one to three per letter.
pub fn arb_substitution() -> impl Strategy<Value = BoundSubstitution> {
    (2usize..=3)
        .prop_flat_map(|n| {
            let letter = 0..n as u8;
            let realisation = (prop::collection::vec(letter, 1..=3), 1u32..=9);
            prop::collection::vec(prop::collection::vec(realisation, 1..=3), n)
                .prop_map(move |rules| (n, rules))
        })
        .prop_filter_map("primitive and expanding", |(n, rules)| {
            let al = Alphabet::new(['a', 'b', 'c'].into_iter().take(n)).unwrap();
            let rules: Vec<Vec<_>> = rules
                .into_iter()
                .map(|rule| {
                    let mut seen = Vec::new();
                    for (w, weight) in rule {
                        if !seen.iter().any(|(v, _): &(Vec<u8>, u32)| *v == w) {
                            seen.push((w, weight));
                        }
                    }
                    let total: u32 = seen.iter().map(|(_, x)| x).sum();
                    seen.into_iter()
                        .map(|(w, x)| (randsub::Word::new(w).unwrap(), x as f64 / total as f64))
                        .collect()
                })
                .collect();
            let sub = BoundSubstitution::new(al, rules).ok()?;
            ensure_primitive(&sub).ok()?;
            perron_data(&substitution_matrix(&sub)).ok()?;
            Some(sub)
        })
}
