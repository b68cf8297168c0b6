//! Bundled example substitutions.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::specfile::parse_spec;
use crate::subst::{Alphabet, BoundSubstitution, RandomSubstitution};

/// (name, spec text) for every bundled fixture.
pub const FIXTURES: &[(&str, &str)] = &[
    ("example-5.1", include_str!("../fixtures/example-5.1.spec")),
    ("period-doubling", include_str!("../fixtures/period-doubling.spec")),
    ("example-5.3", include_str!("../fixtures/example-5.3.spec")),
    ("random-fibonacci", include_str!("../fixtures/random-fibonacci.spec")),
    ("golden-mean", include_str!("../fixtures/golden-mean.spec")),
    ("example-5.6", include_str!("../fixtures/example-5.6.spec")),
    ("dyck", include_str!("../fixtures/dyck.spec")),
    ("example-2.9", include_str!("../fixtures/example-2.9.spec")),
    ("example-2.10", include_str!("../fixtures/example-2.10.spec")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    FIXTURES.iter().map(|(n, _)| *n)
}

pub fn spec_text(name: &str) -> Result<&'static str> {
    FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::UnknownFixture(name.to_string()))
}

pub fn load(name: &str) -> Result<RandomSubstitution> {
    parse_spec(spec_text(name)?)
}

/// Fixture bound at its defaults with `overrides` applied.
pub fn bound(name: &str, overrides: &[(&str, f64)]) -> Result<BoundSubstitution> {
    let sub = load(name)?;
    let overrides: BTreeMap<String, f64> = overrides.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    sub.validate(&sub.binding_with(&overrides))
}

/// Deterministic Fibonacci a → ab, b → a.
pub fn fibonacci() -> BoundSubstitution {
    let al = Alphabet::new(['a', 'b']).unwrap();
    let rules = vec![
        vec![(al.parse_word("ab").unwrap(), 1.0)],
        vec![(al.parse_word("a").unwrap(), 1.0)],
    ];
    BoundSubstitution::new(al, rules).unwrap()
}
