mod common;

use common::{all_fixtures, arb_substitution, caps};
use proptest::prelude::*;
use randsub::conditions::check_urp;
use randsub::entropy::{measure_entropy_bounds, Regime};
use randsub::lang::{language, language_growth, Language};
use randsub::BoundSubstitution;

fn check_factor_closed(lang: &Language) {
    for n in 2..=lang.max_len() {
        for w in &lang.slice(n).words {
            assert!(lang.slice(n - 1).contains(&w[1..]));
            assert!(lang.slice(n - 1).contains(&w[..n - 1]));
        }
    }
}

fn check_stable(sub: &BoundSubstitution, n: usize) {
    let caps = caps();
    let small = language(sub, n, &caps).unwrap();
    let large = language(sub, n + 3, &caps).unwrap();
    for m in 1..=n {
        assert_eq!(small.slice(m), large.slice(m));
    }
}

#[test]
fn fixture_languages() {
    let caps = caps();
    for (name, sub) in all_fixtures() {
        let n = if name == "dyck" { 4 } else { 6 };
        check_factor_closed(&language(&sub, n, &caps).unwrap());
        check_stable(&sub, n - 2);
    }
}

#[test]
fn word_growth_dominates_measure_entropy() {
    let caps = caps();
    for (name, sub) in all_fixtures() {
        let regime = if check_urp(&sub, 3, 3, &caps).unwrap().holds() { Regime::Urp } else { Regime::General };
        let k = if name == "dyck" { 2 } else { 3 };
        let best = measure_entropy_bounds(&sub, k, regime, &caps)
            .unwrap()
            .iter()
            .map(|b| b.lower)
            .fold(f64::NEG_INFINITY, f64::max);
        let n_max = if name == "dyck" { 5 } else { 8 };
        for row in language_growth(&sub, n_max, &caps).unwrap() {
            assert!(row.rate >= best - 1e-12, "{name} n={} rate {} < {best}", row.n, row.rate);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_languages(sub in arb_substitution()) {
        check_factor_closed(&language(&sub, 5, &caps()).unwrap());
        check_stable(&sub, 3);
    }
}
