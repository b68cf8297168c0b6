//! Structural classification of random substitutions.
//!
//! Each condition is a [`ConditionCheck`] trait object held in a
//! [`CheckRegistry`] under a stable name, so front ends can run a single
//! check by name or assemble the full [`ConditionReport`]. Checks over all
//! levels k ∈ ℕ are only verified up to a configured level and say so in
//! their verdicts.

mod checks;
mod recognise;

use rayon::prelude::*;
use serde::Serialize;

pub use checks::{
    check_compatible, check_constant_length, check_dsc, check_geometric, check_ipp, check_isc,
    check_urp,
};
pub use recognise::check_recognisable;

use crate::error::{Error, Result};
use crate::lang::ensure_primitive;
use crate::subst::BoundSubstitution;
use crate::Caps;

/// Verification depths for the finite-level checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckConfig {
    /// Levels for the disjoint/identical set conditions and production probabilities.
    pub k_max: usize,
    /// Longest legal word for the realisation-path check.
    pub n_max: usize,
    /// Largest recognisability radius tried.
    pub r_max: usize,
    #[serde(skip)]
    pub caps: Caps,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            k_max: 3,
            n_max: 3,
            r_max: 12,
            caps: Caps::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Geometric {
    pub lambda: f64,
    pub left: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UrpWitness {
    pub k: usize,
    pub word: String,
    pub first: Vec<String>,
    pub second: Vec<String>,
    pub image: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum UrpVerdict {
    VerifiedTo { n_max: usize, k_max: usize },
    /// One witness per colliding word at the first level (k, n) with a
    /// collision, in canonical word order.
    Refuted { witnesses: Vec<UrpWitness> },
    ImpliedByGeometric,
    Unresolved { reason: String },
}

impl UrpVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, UrpVerdict::VerifiedTo { .. } | UrpVerdict::ImpliedByGeometric)
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, UrpVerdict::Refuted { .. })
    }

    pub fn witnesses(&self) -> &[UrpWitness] {
        match self {
            UrpVerdict::Refuted { witnesses } => witnesses,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SetWitness {
    pub letter: String,
    pub u: String,
    pub v: String,
    pub k: usize,
    /// A word in both images (disjointness) or in exactly one (identity).
    pub word: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum SetVerdict {
    VerifiedTo { k_max: usize },
    Refuted { witness: SetWitness },
    Unresolved { reason: String },
}

impl SetVerdict {
    pub fn verified(&self) -> bool {
        matches!(self, SetVerdict::VerifiedTo { .. })
    }

    pub fn refuted_at(&self) -> Option<usize> {
        match self {
            SetVerdict::Refuted { witness } => Some(witness.k),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IppWitness {
    pub letter: String,
    pub u1: String,
    pub u2: String,
    pub level: usize,
    pub word: String,
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum IppVerdict {
    VerifiedTo { k_max: usize },
    Refuted { witness: IppWitness },
    /// The identical set condition does not hold.
    NotApplicable,
    Unresolved { reason: String },
}

impl IppVerdict {
    pub fn verified(&self) -> bool {
        matches!(self, IppVerdict::VerifiedTo { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Recognisability {
    Found { kappa: usize },
    RefutedViaDsc,
    InconclusiveUpTo { r_max: usize },
    LengthsNotWellDefined,
    Unresolved { reason: String },
}

/// Outcome of one registered check.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "check", content = "result", rename_all = "kebab-case")]
pub enum Finding {
    Compatible(bool),
    ConstantLength(Option<usize>),
    Geometric(Option<Geometric>),
    Urp(UrpVerdict),
    Dsc(SetVerdict),
    Isc(SetVerdict),
    Ipp(IppVerdict),
    Recognisable(Recognisability),
}

pub trait ConditionCheck: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn run(&self, sub: &BoundSubstitution, cfg: &CheckConfig) -> Result<Finding>;
}

/// Named condition checks.
pub struct CheckRegistry {
    checks: Vec<Box<dyn ConditionCheck>>,
}

impl CheckRegistry {
    pub fn empty() -> Self {
        Self { checks: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(checks::Compatible));
        reg.register(Box::new(checks::ConstantLength));
        reg.register(Box::new(checks::GeometricCheck));
        reg.register(Box::new(checks::Urp));
        reg.register(Box::new(checks::Dsc));
        reg.register(Box::new(checks::Isc));
        reg.register(Box::new(checks::Ipp));
        reg.register(Box::new(recognise::Recognisable));
        reg
    }

    /// Adds a check, replacing any check with the same name.
    pub fn register(&mut self, check: Box<dyn ConditionCheck>) {
        self.checks.retain(|c| c.name() != check.name());
        self.checks.push(check);
    }

    pub fn get(&self, name: &str) -> Option<&dyn ConditionCheck> {
        self.checks.iter().find(|c| c.name() == name).map(|c| c.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.checks.iter().map(|c| c.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn ConditionCheck> {
        self.checks.iter().map(|c| c.as_ref())
    }

    pub fn run(&self, name: &str, sub: &BoundSubstitution, cfg: &CheckConfig) -> Result<Finding> {
        let check = self
            .get(name)
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "condition check",
                name: name.to_string(),
            })?;
        check.run(sub, cfg)
    }

    /// Runs every check concurrently; results keep registration order.
    pub fn run_all(&self, sub: &BoundSubstitution, cfg: &CheckConfig) -> Vec<(&'static str, Result<Finding>)> {
        self.checks
            .par_iter()
            .map(|c| (c.name(), c.run(sub, cfg)))
            .collect()
    }
}

impl Default for CheckRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// All structural conditions of a primitive substitution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub compatible: bool,
    pub constant_length: Option<usize>,
    pub geometric: Option<Geometric>,
    pub urp: UrpVerdict,
    pub dsc: SetVerdict,
    pub isc: SetVerdict,
    pub ipp: IppVerdict,
    pub recognisable: Recognisability,
    pub config: CheckConfig,
}

fn unresolved(e: &Error) -> Option<String> {
    matches!(e, Error::SizeLimitExceeded { .. }).then(|| e.to_string())
}

impl ConditionReport {
    pub fn compute(sub: &BoundSubstitution, cfg: &CheckConfig) -> Result<Self> {
        Self::from_registry(&CheckRegistry::builtin(), sub, cfg)
    }

    /// Assembles the report from the registry's built-in check names.
    /// Checks that hit a resource cap are recorded as unresolved.
    pub fn from_registry(reg: &CheckRegistry, sub: &BoundSubstitution, cfg: &CheckConfig) -> Result<Self> {
        ensure_primitive(sub)?;
        let mut report = ConditionReport {
            compatible: false,
            constant_length: None,
            geometric: None,
            urp: UrpVerdict::Unresolved { reason: "not run".into() },
            dsc: SetVerdict::Unresolved { reason: "not run".into() },
            isc: SetVerdict::Unresolved { reason: "not run".into() },
            ipp: IppVerdict::Unresolved { reason: "not run".into() },
            recognisable: Recognisability::Unresolved { reason: "not run".into() },
            config: cfg.clone(),
        };
        for (name, outcome) in reg.run_all(sub, cfg) {
            let finding = match outcome {
                Ok(f) => f,
                Err(e) => {
                    let reason = unresolved(&e).ok_or(e)?;
                    match name {
                        "urp" => report.urp = UrpVerdict::Unresolved { reason },
                        "dsc" => report.dsc = SetVerdict::Unresolved { reason },
                        "isc" => report.isc = SetVerdict::Unresolved { reason },
                        "ipp" => report.ipp = IppVerdict::Unresolved { reason },
                        "recognisable" => report.recognisable = Recognisability::Unresolved { reason },
                        _ => {}
                    }
                    continue;
                }
            };
            match finding {
                Finding::Compatible(b) => report.compatible = b,
                Finding::ConstantLength(l) => report.constant_length = l,
                Finding::Geometric(g) => report.geometric = g,
                Finding::Urp(v) => report.urp = v,
                Finding::Dsc(v) => report.dsc = v,
                Finding::Isc(v) => report.isc = v,
                Finding::Ipp(v) => report.ipp = v,
                Finding::Recognisable(v) => report.recognisable = v,
            }
        }
        Ok(report)
    }

    /// Implications between the conditions that must hold in any report.
    pub fn implication_violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.constant_length.is_some() && self.geometric.is_none() {
            out.push("constant length without geometric compatibility");
        }
        if self.compatible && self.geometric.is_none() {
            out.push("compatible without geometric compatibility");
        }
        if self.geometric.is_some() && self.urp.is_refuted() {
            out.push("geometric compatibility with refuted realisation paths");
        }
        if matches!(self.recognisable, Recognisability::Found { .. }) && self.dsc.refuted_at().is_some() {
            out.push("recognisable without the disjoint set condition");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    struct Always;

    impl ConditionCheck for Always {
        fn name(&self) -> &'static str {
            "compatible"
        }
        fn description(&self) -> &'static str {
            "stub"
        }
        fn run(&self, _: &BoundSubstitution, _: &CheckConfig) -> Result<Finding> {
            Ok(Finding::Compatible(true))
        }
    }

    #[test]
    fn registry_lookup_and_replacement() {
        let mut reg = CheckRegistry::builtin();
        assert_eq!(
            reg.names(),
            vec!["compatible", "constant-length", "geometric", "urp", "dsc", "isc", "ipp", "recognisable"]
        );
        let sub = fixtures::bound("example-2.9", &[]).unwrap();
        let cfg = CheckConfig::default();
        assert_eq!(reg.run("compatible", &sub, &cfg).unwrap(), Finding::Compatible(false));
        reg.register(Box::new(Always));
        assert_eq!(reg.names().len(), 8);
        assert_eq!(reg.run("compatible", &sub, &cfg).unwrap(), Finding::Compatible(true));
        assert!(reg.run("nope", &sub, &cfg).is_err());
    }

    #[test]
    fn report_for_period_doubling() {
        let sub = fixtures::bound("period-doubling", &[]).unwrap();
        let r = ConditionReport::compute(&sub, &CheckConfig::default()).unwrap();
        assert!(r.compatible);
        assert_eq!(r.constant_length, Some(2));
        assert_eq!(r.urp, UrpVerdict::ImpliedByGeometric);
        assert!(r.dsc.verified());
        assert!(r.isc.refuted_at().is_some());
        assert_eq!(r.ipp, IppVerdict::NotApplicable);
        assert!(r.implication_violations().is_empty());
    }

    #[test]
    fn size_caps_become_unresolved() {
        let sub = fixtures::bound("dyck", &[]).unwrap();
        let cfg = CheckConfig {
            caps: Caps {
                support: 50,
                ..Caps::default()
            },
            ..CheckConfig::default()
        };
        let r = ConditionReport::compute(&sub, &cfg).unwrap();
        assert!(matches!(r.isc, SetVerdict::Unresolved { .. } | SetVerdict::Refuted { .. }));
    }
}
