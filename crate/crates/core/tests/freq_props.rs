mod common;

use common::{all_fixtures, arb_substitution, caps};
use proptest::prelude::*;
use randsub::freq::{consistency_residual, frequencies_at_length, word_frequencies};
use randsub::inflate::word_distribution;
use randsub::lang::legal_words;
use randsub::spectral::{perron_data, substitution_matrix};
use randsub::{BoundSubstitution, Letter};

fn check_table(sub: &BoundSubstitution, n: usize) {
    let caps = caps();
    let table = word_frequencies(sub, n, &caps).unwrap();
    assert!(table.fixed_point_residual < 1e-9, "residual {}", table.fixed_point_residual);
    assert!(consistency_residual(&table) < 1e-8);
    assert!(table.warning.is_none());
    let perron = perron_data(&substitution_matrix(sub)).unwrap();
    for a in sub.alphabet().letters() {
        assert!((table.get(&[a]) - perron.right[a as usize]).abs() <= 1e-9);
    }
    for m in 1..=n {
        let legal = legal_words(sub, m, &caps).unwrap();
        assert_eq!(table.slice(m).len(), legal.len());
        assert!(table.slice(m).iter().all(|(w, f)| *f > 0.0 && legal.contains(w)));
        assert!((table.slice_total(m) - 1.0).abs() <= 1e-9);
    }
}

/// μ[w] ≥ μ[v]·P[ϑ(v) = w]/λ for legal two-letter v.
fn check_image_lower_bound(sub: &BoundSubstitution) {
    let caps = caps();
    let lambda = perron_data(&substitution_matrix(sub)).unwrap().lambda;
    let pairs = frequencies_at_length(sub, 2, &caps).unwrap();
    for (v, fv) in &pairs {
        let images = word_distribution(sub, v, 1, &caps).unwrap();
        let len = images.entries()[0].0.len();
        let target = frequencies_at_length(sub, len, &caps).unwrap();
        for (w, p) in images.iter() {
            let fw = target.get(w).copied().unwrap_or(0.0);
            assert!(fw >= fv * p / lambda - 1e-9, "{fw} < {}", fv * p / lambda);
        }
    }
}

fn lengths_well_defined(sub: &BoundSubstitution) -> bool {
    (0..sub.size()).all(|a| sub.image_len(a as Letter).is_some())
}

#[test]
fn fixture_frequencies() {
    for (_, sub) in all_fixtures() {
        check_table(&sub, 4);
    }
}

#[test]
fn lemma_image_lower_bound_on_fixtures() {
    let mut checked = 0;
    for (_, sub) in all_fixtures() {
        if lengths_well_defined(&sub) {
            check_image_lower_bound(&sub);
            checked += 1;
        }
    }
    assert!(checked >= 5);
    check_image_lower_bound(&common::marker());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_frequencies(sub in arb_substitution()) {
        check_table(&sub, 3);
        if lengths_well_defined(&sub) {
            check_image_lower_bound(&sub);
        }
    }
}
