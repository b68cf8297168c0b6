//! Exact, desk-scale analysis of random substitutions.
//!
//! The crate takes a user-defined random substitution and computes its
//! Perron–Frobenius data, the exact laws of its inflation words, bounds and
//! closed forms for the entropy of its frequency measure, word frequencies,
//! topological-entropy bounds and a structural classification.
//!
//! ```
//! use randsub::{fixtures, entropy, Caps};
//!
//! let sub = fixtures::load("period-doubling").unwrap().bind_defaults().unwrap();
//! let perron = randsub::spectral::perron_data(&randsub::spectral::substitution_matrix(&sub)).unwrap();
//! assert!((perron.lambda - 2.0).abs() < 1e-9);
//! let bounds = entropy::measure_entropy_bounds(&sub, 2, entropy::Regime::Urp, &Caps::default()).unwrap();
//! assert!(bounds[0].lower <= bounds[0].upper);
//! ```

pub mod conditions;
pub mod entropy;
pub mod error;
pub mod fixtures;
pub mod freq;
pub mod inflate;
pub mod lang;
pub mod mc;
pub mod report;
pub mod spectral;
pub mod specfile;
pub mod subst;

pub use error::{Error, Result};
pub use subst::{
    abelianise, AbelianVector, Alphabet, BoundSubstitution, Letter, Marginal, ProbExpr,
    RandomSubstitution, Word,
};

use serde::Serialize;

/// Name of the environment variable holding default caps, in the same
/// `key=value,...` form accepted by [`Caps::parse_overrides`].
pub const CAPS_ENV: &str = "RANDSUB_CAPS";

/// Resource limits shared by all enumerations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Caps {
    /// Maximum number of (word, probability) pairs in one distribution.
    pub support: usize,
    /// Maximum number of legal words tracked by a language enumeration.
    pub language: usize,
    /// Maximum number of realisation tuples examined by one exhaustive check.
    pub tuples: usize,
    /// Maximum number of marginals materialised at once.
    pub marginals: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            support: 5_000_000,
            language: 2_000_000,
            tuples: 20_000_000,
            marginals: 1_000_000,
        }
    }
}

impl Caps {
    /// Defaults overridden by the [`CAPS_ENV`] variable when it is set.
    pub fn from_env() -> Result<Self> {
        let mut caps = Self::default();
        if let Ok(text) = std::env::var(CAPS_ENV) {
            caps.parse_overrides(&text)?;
        }
        Ok(caps)
    }

    /// Applies `support=N,language=N,...` overrides.
    pub fn parse_overrides(&mut self, text: &str) -> Result<()> {
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let bad = || Error::Parse {
                line: 1,
                column: 1,
                message: format!("invalid cap '{item}'"),
            };
            let (key, value) = item.split_once('=').ok_or_else(bad)?;
            let value: usize = value.trim().replace('_', "").parse().map_err(|_| bad())?;
            match key.trim() {
                "support" => self.support = value,
                "language" => self.language = value,
                "tuples" => self.tuples = value,
                "marginals" => self.marginals = value,
                _ => return Err(bad()),
            }
        }
        Ok(())
    }
}
