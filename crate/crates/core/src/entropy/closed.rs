//! Closed-form entropy rules.

use serde::Serialize;

use super::{lambda_of, ClosedForm};
use crate::conditions::{ConditionReport, Recognisability, SetVerdict, UrpVerdict};
use crate::error::{Error, Result};
use crate::inflate::{count_vector, entropy_vector};
use crate::spectral::{perron_data, substitution_matrix};
use crate::subst::BoundSubstitution;
use crate::Caps;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Measure,
    Topological,
}

/// A closed-form entropy formula guarded by verified hypotheses.
pub trait ClosedFormRule: Send + Sync {
    fn name(&self) -> &'static str;
    fn target(&self) -> Target;
    fn description(&self) -> &'static str;
    /// The finite-level qualifier when every hypothesis is verified, or the
    /// first unmet hypothesis.
    fn hypotheses(&self, sub: &BoundSubstitution, report: &ConditionReport) -> std::result::Result<String, String>;
    fn value(&self, sub: &BoundSubstitution, caps: &Caps) -> Result<f64>;

    fn evaluate(&self, sub: &BoundSubstitution, report: &ConditionReport, caps: &Caps) -> Result<ClosedForm> {
        let qualifier = self.hypotheses(sub, report).map_err(Error::HypothesesNotMet)?;
        Ok(ClosedForm {
            value: self.value(sub, caps)?,
            justification: self.name().to_string(),
            qualifier,
        })
    }
}

pub struct ClosedFormRegistry {
    rules: Vec<Box<dyn ClosedFormRule>>,
}

impl ClosedFormRegistry {
    pub fn empty() -> Self {
        Self { rules: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(DisjointSets));
        reg.register(Box::new(IdenticalSets));
        reg.register(Box::new(TopDisjoint));
        reg.register(Box::new(TopIdentical));
        reg.register(Box::new(ConstantLengthRecognisable));
        reg
    }

    /// Adds a rule, replacing any rule of the same name in place.
    pub fn register(&mut self, rule: Box<dyn ClosedFormRule>) {
        match self.rules.iter().position(|r| r.name() == rule.name()) {
            Some(i) => self.rules[i] = rule,
            None => self.rules.push(rule),
        }
    }

    pub fn get(&self, name: &str) -> Option<&dyn ClosedFormRule> {
        self.rules.iter().find(|r| r.name() == name).map(|r| r.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.rules.iter().map(|r| r.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn ClosedFormRule> {
        self.rules.iter().map(|r| r.as_ref())
    }

    /// Evaluates the rule registered under `name`.
    pub fn evaluate(
        &self,
        name: &str,
        sub: &BoundSubstitution,
        report: &ConditionReport,
        caps: &Caps,
    ) -> Result<ClosedForm> {
        self.get(name)
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "closed-form rule",
                name: name.to_string(),
            })?
            .evaluate(sub, report, caps)
    }

    /// The first rule for `target`, in registration order, whose hypotheses hold.
    pub fn first_applicable(
        &self,
        target: Target,
        sub: &BoundSubstitution,
        report: &ConditionReport,
        caps: &Caps,
    ) -> Result<ClosedForm> {
        let mut unmet = Vec::new();
        for rule in self.iter().filter(|r| r.target() == target) {
            match rule.hypotheses(sub, report) {
                Ok(_) => return rule.evaluate(sub, report, caps),
                Err(why) => unmet.push(format!("{}: {why}", rule.name())),
            }
        }
        Err(Error::HypothesesNotMet(unmet.join("; ")))
    }
}

fn urp_qualifier(urp: &UrpVerdict) -> std::result::Result<String, String> {
    match urp {
        UrpVerdict::ImpliedByGeometric => Ok("URP implied by geometric compatibility".into()),
        UrpVerdict::VerifiedTo { n_max, k_max } => Ok(format!("URP verified for |v| <= {n_max}, k <= {k_max}")),
        UrpVerdict::Refuted { .. } => Err("unique realisation paths refuted".into()),
        UrpVerdict::Unresolved { reason } => Err(format!("unique realisation paths unresolved ({reason})")),
    }
}

fn set_qualifier(name: &str, verdict: &SetVerdict) -> std::result::Result<String, String> {
    match verdict {
        SetVerdict::VerifiedTo { k_max } => Ok(format!("{name} verified for k <= {k_max}")),
        SetVerdict::Refuted { .. } => Err(format!("{name} refuted")),
        SetVerdict::Unresolved { reason } => Err(format!("{name} unresolved ({reason})")),
    }
}

fn compatible(report: &ConditionReport) -> std::result::Result<(), String> {
    if report.compatible {
        Ok(())
    } else {
        Err("not compatible".into())
    }
}

fn weighted_level1(sub: &BoundSubstitution, caps: &Caps, counts: bool) -> Result<(f64, f64)> {
    let perron = perron_data(&substitution_matrix(sub))?;
    let values = if counts {
        count_vector(sub, 1, caps)?.values
    } else {
        entropy_vector(sub, 1, caps)?.values
    };
    Ok((lambda_of(&perron), perron.weigh(&values)))
}

struct DisjointSets;

impl ClosedFormRule for DisjointSets {
    fn name(&self) -> &'static str {
        "dsc"
    }
    fn target(&self) -> Target {
        Target::Measure
    }
    fn description(&self) -> &'static str {
        "unique realisation paths and disjoint sets: H_1.R / (lambda - 1)"
    }
    fn hypotheses(&self, _: &BoundSubstitution, report: &ConditionReport) -> std::result::Result<String, String> {
        let urp = urp_qualifier(&report.urp)?;
        let dsc = set_qualifier("disjoint set condition", &report.dsc)?;
        Ok(format!("{urp}; {dsc}"))
    }
    fn value(&self, sub: &BoundSubstitution, caps: &Caps) -> Result<f64> {
        let (lambda, hr) = weighted_level1(sub, caps, false)?;
        Ok(hr / (lambda - 1.0))
    }
}

struct IdenticalSets;

impl ClosedFormRule for IdenticalSets {
    fn name(&self) -> &'static str {
        "isc-ipp"
    }
    fn target(&self) -> Target {
        Target::Measure
    }
    fn description(&self) -> &'static str {
        "unique realisation paths, identical sets and production probabilities: H_1.R / lambda"
    }
    fn hypotheses(&self, _: &BoundSubstitution, report: &ConditionReport) -> std::result::Result<String, String> {
        let urp = urp_qualifier(&report.urp)?;
        let isc = set_qualifier("identical set condition", &report.isc)?;
        match &report.ipp {
            crate::conditions::IppVerdict::VerifiedTo { k_max } => {
                Ok(format!("{urp}; {isc}; production probabilities identical for k <= {k_max}"))
            }
            _ => Err("identical production probabilities not verified".into()),
        }
    }
    fn value(&self, sub: &BoundSubstitution, caps: &Caps) -> Result<f64> {
        let (lambda, hr) = weighted_level1(sub, caps, false)?;
        Ok(hr / lambda)
    }
}

struct TopDisjoint;

impl ClosedFormRule for TopDisjoint {
    fn name(&self) -> &'static str {
        "top-dsc"
    }
    fn target(&self) -> Target {
        Target::Topological
    }
    fn description(&self) -> &'static str {
        "compatible with disjoint sets: q_1.R / (lambda - 1)"
    }
    fn hypotheses(&self, _: &BoundSubstitution, report: &ConditionReport) -> std::result::Result<String, String> {
        compatible(report)?;
        set_qualifier("disjoint set condition", &report.dsc)
    }
    fn value(&self, sub: &BoundSubstitution, caps: &Caps) -> Result<f64> {
        let (lambda, qr) = weighted_level1(sub, caps, true)?;
        Ok(qr / (lambda - 1.0))
    }
}

struct TopIdentical;

impl ClosedFormRule for TopIdentical {
    fn name(&self) -> &'static str {
        "top-isc"
    }
    fn target(&self) -> Target {
        Target::Topological
    }
    fn description(&self) -> &'static str {
        "compatible with identical sets: q_1.R / lambda"
    }
    fn hypotheses(&self, _: &BoundSubstitution, report: &ConditionReport) -> std::result::Result<String, String> {
        compatible(report)?;
        set_qualifier("identical set condition", &report.isc)
    }
    fn value(&self, sub: &BoundSubstitution, caps: &Caps) -> Result<f64> {
        let (lambda, qr) = weighted_level1(sub, caps, true)?;
        Ok(qr / lambda)
    }
}

/// Common #ϑ(a), when every letter has the same number of realisations.
pub(super) fn equal_cardinality(sub: &BoundSubstitution) -> Option<usize> {
    let counts = sub.realisation_counts();
    counts.iter().all(|&c| c == counts[0]).then_some(counts[0])
}

struct ConstantLengthRecognisable;

impl ClosedFormRule for ConstantLengthRecognisable {
    fn name(&self) -> &'static str {
        "constant-length-recognisable"
    }
    fn target(&self) -> Target {
        Target::Topological
    }
    fn description(&self) -> &'static str {
        "constant length l, recognisable, N realisations per letter: log N / (l - 1)"
    }
    fn hypotheses(&self, sub: &BoundSubstitution, report: &ConditionReport) -> std::result::Result<String, String> {
        let ell = report.constant_length.ok_or("not of constant length")?;
        let Recognisability::Found { kappa } = report.recognisable else {
            return Err("recognisability not established".into());
        };
        let n = equal_cardinality(sub).ok_or("realisation counts differ between letters")?;
        Ok(format!("length {ell}, recognisable with radius {kappa}, {n} realisations per letter"))
    }
    fn value(&self, sub: &BoundSubstitution, _: &Caps) -> Result<f64> {
        let ell = sub.image_len(0).ok_or_else(|| Error::LengthNotWellDefined {
            letter: sub.alphabet().symbol(0).to_string(),
        })?;
        let n = equal_cardinality(sub).ok_or_else(|| Error::HypothesesNotMet("unequal realisation counts".into()))?;
        Ok((n as f64).ln() / (ell as f64 - 1.0))
    }
}
