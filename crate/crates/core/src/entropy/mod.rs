//! Entropy of frequency measures and of the subshift.
//!
//! Level-k brackets come from the entropy vectors H_k (measure) and the
//! count vectors q_m (topological), weighted by the right Perron vector.
//! Closed forms are [`ClosedFormRule`] trait objects in a
//! [`ClosedFormRegistry`]; each one checks the verdicts it needs in a
//! [`ConditionReport`] before evaluating.

mod closed;

use std::str::FromStr;

use serde::Serialize;

pub use closed::{ClosedFormRegistry, ClosedFormRule, Target};

use crate::conditions::{ConditionReport, Recognisability, UrpVerdict};
use crate::error::{Error, Result};
use crate::inflate::{phi, Inflator};
use crate::spectral::{char_poly, perron_data, substitution_matrix, PerronData};
use crate::subst::BoundSubstitution;
use crate::Caps;

pub const DEFAULT_K_MAX: usize = 6;
pub const DEFAULT_M_MAX: usize = 6;

/// H(p) = −p log p − (1−p) log(1−p), with 0·log 0 = 0.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain {
            function: "binary_entropy",
            value: p,
        });
    }
    Ok(phi(p) + phi(1.0 - p))
}

pub(crate) fn lambda_of(perron: &PerronData) -> f64 {
    perron.lambda_exact.map_or(perron.lambda, |l| l as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Lower bounds carry the counterterm H(λ^{-k}).
    General,
    /// Unique realisation paths: no counterterm.
    Urp,
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Regime::General),
            "urp" => Ok(Regime::Urp),
            other => Err(Error::Parse {
                line: 1,
                column: 1,
                message: format!("unknown regime '{other}' (expected general or urp)"),
            }),
        }
    }
}

/// The regime licensed by a conditions report.
pub fn regime_from(report: &ConditionReport) -> Regime {
    if report.urp.holds() {
        Regime::Urp
    } else {
        Regime::General
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyBounds {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    /// H(λ^{-k}) when subtracted from the lower bound, else 0.
    pub counterterm: f64,
    pub regime: Regime,
}

/// Bounds for k = 1..=k_max, stopping at the first error after level 1.
fn bounds_until_error(
    sub: &BoundSubstitution,
    k_max: usize,
    regime: Regime,
    caps: &Caps,
) -> Result<(Vec<EntropyBounds>, Option<Error>)> {
    let perron = perron_data(&substitution_matrix(sub))?;
    let lambda = lambda_of(&perron);
    let inflator = Inflator::new(sub, caps.clone());
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let h = match inflator.entropy_vector(k) {
            Ok(h) => h,
            Err(e) if k > 1 => return Ok((out, Some(e))),
            Err(e) => return Err(e),
        };
        let hr = perron.weigh(&h.values);
        let lk = lambda.powi(k as i32);
        let counterterm = match regime {
            Regime::General => binary_entropy(1.0 / lk)?,
            Regime::Urp => 0.0,
        };
        out.push(EntropyBounds {
            k,
            lower: hr / lk - counterterm,
            upper: hr / (lk - 1.0),
            counterterm,
            regime,
        });
    }
    Ok((out, None))
}

/// Measure-entropy brackets of the frequency measure for k = 1..=k_max.
pub fn measure_entropy_bounds(
    sub: &BoundSubstitution,
    k_max: usize,
    regime: Regime,
    caps: &Caps,
) -> Result<Vec<EntropyBounds>> {
    match bounds_until_error(sub, k_max, regime, caps)? {
        (bounds, None) => Ok(bounds),
        (_, Some(e)) => Err(e),
    }
}

/// A closed-form value with the rule that produced it and the finite
/// verification levels it rests on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedForm {
    pub value: f64,
    pub justification: String,
    pub qualifier: String,
}

pub fn measure_entropy_closed(sub: &BoundSubstitution, report: &ConditionReport, caps: &Caps) -> Result<ClosedForm> {
    ClosedFormRegistry::builtin().first_applicable(Target::Measure, sub, report, caps)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopBounds {
    pub m: usize,
    pub lower: f64,
    pub upper: f64,
}

fn top_bounds_until_error(
    sub: &BoundSubstitution,
    report: &ConditionReport,
    m_max: usize,
    caps: &Caps,
) -> Result<(Vec<TopBounds>, Option<Error>)> {
    if !report.compatible {
        return Err(Error::NotCompatible);
    }
    let perron = perron_data(&substitution_matrix(sub))?;
    let lambda = lambda_of(&perron);
    let inflator = Inflator::new(sub, caps.clone());
    let mut out = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let q = match inflator.count_vector(m) {
            Ok(q) => q,
            Err(e) if m > 1 => return Ok((out, Some(e))),
            Err(e) => return Err(e),
        };
        let qr = perron.weigh(&q.values);
        let lm = lambda.powi(m as i32);
        out.push(TopBounds {
            m,
            lower: qr / lm,
            upper: qr / (lm - 1.0),
        });
    }
    Ok((out, None))
}

/// Topological-entropy brackets for m = 1..=m_max; compatible substitutions only.
pub fn top_entropy_bounds(
    sub: &BoundSubstitution,
    report: &ConditionReport,
    m_max: usize,
    caps: &Caps,
) -> Result<Vec<TopBounds>> {
    match top_bounds_until_error(sub, report, m_max, caps)? {
        (bounds, None) => Ok(bounds),
        (_, Some(e)) => Err(e),
    }
}

pub fn top_entropy_closed(sub: &BoundSubstitution, report: &ConditionReport, caps: &Caps) -> Result<ClosedForm> {
    ClosedFormRegistry::builtin().first_applicable(Target::Topological, sub, report, caps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MmeJustification {
    /// Compatible, disjoint or identical sets, uniform probabilities.
    CompatibleSetCondition,
    /// Constant length, recognisable, equal realisation counts, uniform probabilities.
    ConstantLengthRecognisable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErgodicityHypothesis {
    EqualCardinalities,
    /// Compatible and ℓ is the only non-zero eigenvalue.
    SingleNonzeroEigenvalue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub mme: Option<MmeJustification>,
    pub intrinsically_ergodic: Option<ErgodicityHypothesis>,
}

/// Which sufficient condition for intrinsic ergodicity holds, if any.
pub fn intrinsic_ergodicity_hypothesis(
    sub: &BoundSubstitution,
    report: &ConditionReport,
) -> Option<ErgodicityHypothesis> {
    let ell = report.constant_length?;
    if !matches!(report.recognisable, Recognisability::Found { .. }) {
        return None;
    }
    if closed::equal_cardinality(sub).is_some() {
        return Some(ErgodicityHypothesis::EqualCardinalities);
    }
    let single = report.compatible
        && char_poly(&substitution_matrix(sub)).is_ok_and(|c| c.only_nonzero_eigenvalue(ell as i128));
    single.then_some(ErgodicityHypothesis::SingleNonzeroEigenvalue)
}

pub fn classify(sub: &BoundSubstitution, report: &ConditionReport) -> Classification {
    let uniform = sub.is_uniform();
    let recognisable = matches!(report.recognisable, Recognisability::Found { .. });
    let mme = if uniform && report.compatible && (report.dsc.verified() || report.isc.verified()) {
        Some(MmeJustification::CompatibleSetCondition)
    } else if uniform && report.constant_length.is_some() && recognisable && closed::equal_cardinality(sub).is_some() {
        Some(MmeJustification::ConstantLengthRecognisable)
    } else {
        None
    };
    Classification {
        mme,
        intrinsically_ergodic: intrinsic_ergodicity_hypothesis(sub, report),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyOptions {
    pub k_max: usize,
    pub m_max: usize,
    /// Overrides the regime derived from the conditions report.
    pub regime: Option<Regime>,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self {
            k_max: DEFAULT_K_MAX,
            m_max: DEFAULT_M_MAX,
            regime: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub lambda: f64,
    pub regime: Regime,
    /// The URP regime rests on a finite-level verification only.
    pub regime_conditional: bool,
    pub bounds: Vec<EntropyBounds>,
    /// Why the bounds list stops before k_max.
    pub bounds_truncated: Option<String>,
    pub measure_entropy_closed: Option<ClosedForm>,
    pub top_entropy_bounds: Option<Vec<TopBounds>>,
    pub top_bounds_truncated: Option<String>,
    pub top_entropy_closed: Option<ClosedForm>,
    pub mme_flag: Option<MmeJustification>,
    pub intrinsically_ergodic_flag: Option<ErgodicityHypothesis>,
}

fn optional<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::HypothesesNotMet(_) | Error::NotCompatible) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn entropy_report(
    sub: &BoundSubstitution,
    report: &ConditionReport,
    opts: &EntropyOptions,
    caps: &Caps,
) -> Result<EntropyReport> {
    let perron = perron_data(&substitution_matrix(sub))?;
    let regime = opts.regime.unwrap_or_else(|| regime_from(report));
    let regime_conditional = regime == Regime::Urp && !matches!(report.urp, UrpVerdict::ImpliedByGeometric);
    let (bounds, stop) = bounds_until_error(sub, opts.k_max, regime, caps)?;
    let (top_entropy_bounds, top_stop) = match top_bounds_until_error(sub, report, opts.m_max, caps) {
        Ok((b, stop)) => (Some(b), stop),
        Err(Error::NotCompatible) => (None, None),
        Err(e) => return Err(e),
    };
    let flags = classify(sub, report);
    Ok(EntropyReport {
        lambda: lambda_of(&perron),
        regime,
        regime_conditional,
        bounds,
        bounds_truncated: stop.map(|e| e.to_string()),
        measure_entropy_closed: optional(measure_entropy_closed(sub, report, caps))?,
        top_entropy_bounds,
        top_bounds_truncated: top_stop.map(|e| e.to_string()),
        top_entropy_closed: optional(top_entropy_closed(sub, report, caps))?,
        mme_flag: flags.mme,
        intrinsically_ergodic_flag: flags.intrinsically_ergodic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerEntropy {
    pub n: usize,
    pub lambda: f64,
    pub bounds: EntropyBounds,
}

/// Level-k brackets for the uniform-probability powers ϑ^n, n = 1..=n_max.
///
/// The frequency measures of these powers approach a measure of maximal
/// entropy along a subsequence; their entropies are reported, the limit is
/// not constructed. URP is a property of the realisation sets of all powers,
/// so the regime of the base report carries over.
pub fn uniform_power_sequence(
    sub: &BoundSubstitution,
    report: &ConditionReport,
    n_max: usize,
    k: usize,
    caps: &Caps,
) -> Result<Vec<PowerEntropy>> {
    let regime = regime_from(report);
    (1..=n_max)
        .map(|n| {
            let power = sub.power(n, caps)?.uniform();
            let perron = perron_data(&substitution_matrix(&power))?;
            let bounds = measure_entropy_bounds(&power, k, regime, caps)?
                .pop()
                .expect("k >= 1");
            Ok(PowerEntropy {
                n,
                lambda: lambda_of(&perron),
                bounds,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::CheckConfig;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    fn report(sub: &BoundSubstitution) -> ConditionReport {
        ConditionReport::compute(sub, &CheckConfig::default()).unwrap()
    }

    #[test]
    fn binary_entropy_values() {
        assert_abs_diff_eq!(binary_entropy(0.5).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        let t = 0.6180339887_f64;
        let direct = -t * t.ln() - (1.0 - t) * (1.0 - t).ln();
        assert_abs_diff_eq!(binary_entropy(t).unwrap(), direct, epsilon = 1e-15);
        assert_abs_diff_eq!(binary_entropy(t).unwrap(), 0.665018, epsilon = 1e-6);
        assert!(matches!(binary_entropy(1.5), Err(Error::Domain { .. })));
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn deterministic_bounds_vanish() {
        let sub = fixtures::fibonacci();
        for b in measure_entropy_bounds(&sub, 4, Regime::Urp, &Caps::default()).unwrap() {
            assert_eq!(b.lower, 0.0);
            assert_eq!(b.upper, 0.0);
        }
    }

    #[test]
    fn period_doubling_closed_forms() {
        let sub = fixtures::bound("period-doubling", &[("p", 0.3)]).unwrap();
        let rep = report(&sub);
        let closed = measure_entropy_closed(&sub, &rep, &Caps::default()).unwrap();
        assert_eq!(closed.justification, "dsc");
        let h = -(0.3f64 * 0.3f64.ln() + 0.7 * 0.7f64.ln());
        assert_abs_diff_eq!(closed.value, 2.0 / 3.0 * h, epsilon = 1e-12);
        let top = top_entropy_closed(&sub, &rep, &Caps::default()).unwrap();
        assert_abs_diff_eq!(top.value, 2.0 / 3.0 * 2f64.ln(), epsilon = 1e-12);
        let tb = top_entropy_bounds(&sub, &rep, 1, &Caps::default()).unwrap();
        assert_abs_diff_eq!(tb[0].lower, 1.0 / 3.0 * 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(tb[0].upper, 2.0 / 3.0 * 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn period_doubling_classification() {
        let sub = fixtures::bound("period-doubling", &[]).unwrap();
        let flags = classify(&sub, &report(&sub));
        assert_eq!(flags.mme, Some(MmeJustification::CompatibleSetCondition));
        assert_eq!(flags.intrinsically_ergodic, None);
    }

    #[test]
    fn constant_length_recognisable_rule() {
        let sub = crate::specfile::parse_spec(
            "alphabet: a b\nrule a -> \"aab\" : 1/2 | \"abb\" : 1/2\nrule b -> \"aba\" : 1/2 | \"bba\" : 1/2\n",
        )
        .unwrap()
        .bind_defaults()
        .unwrap();
        let rep = report(&sub);
        assert!(!rep.compatible);
        assert_eq!(rep.recognisable, Recognisability::Found { kappa: 5 });
        let top = top_entropy_closed(&sub, &rep, &Caps::default()).unwrap();
        assert_eq!(top.justification, "constant-length-recognisable");
        assert_abs_diff_eq!(top.value, 0.5 * 2f64.ln(), epsilon = 1e-15);
        let flags = classify(&sub, &rep);
        assert_eq!(flags.mme, Some(MmeJustification::ConstantLengthRecognisable));
        assert_eq!(flags.intrinsically_ergodic, Some(ErgodicityHypothesis::EqualCardinalities));
        let closed = measure_entropy_closed(&sub, &rep, &Caps::default()).unwrap();
        assert_abs_diff_eq!(closed.value, top.value, epsilon = 1e-12);
    }

    #[test]
    fn incompatible_top_bounds_rejected() {
        let sub = fixtures::bound("example-2.9", &[]).unwrap();
        let rep = report(&sub);
        assert_eq!(top_entropy_bounds(&sub, &rep, 2, &Caps::default()), Err(Error::NotCompatible));
    }

    #[test]
    fn general_regime_subtracts_counterterm() {
        let sub = fixtures::bound("period-doubling", &[]).unwrap();
        let caps = Caps::default();
        let g = measure_entropy_bounds(&sub, 3, Regime::General, &caps).unwrap();
        let u = measure_entropy_bounds(&sub, 3, Regime::Urp, &caps).unwrap();
        for (g, u) in g.iter().zip(&u) {
            assert_eq!(u.counterterm, 0.0);
            assert_abs_diff_eq!(g.counterterm, binary_entropy(2f64.powi(-(g.k as i32))).unwrap());
            assert_abs_diff_eq!(u.lower - g.lower, g.counterterm, epsilon = 1e-15);
            assert_eq!(g.upper, u.upper);
        }
    }

    #[test]
    fn size_cap_truncates_report_bounds() {
        let sub = fixtures::bound("random-fibonacci", &[]).unwrap();
        let caps = Caps {
            support: 40,
            ..Caps::default()
        };
        let rep = report(&sub);
        let er = entropy_report(&sub, &rep, &EntropyOptions::default(), &caps).unwrap();
        assert!(!er.bounds.is_empty() && er.bounds.len() < DEFAULT_K_MAX);
        assert!(er.bounds_truncated.is_some());
        assert!(matches!(
            measure_entropy_bounds(&sub, 6, Regime::Urp, &caps),
            Err(Error::SizeLimitExceeded { .. })
        ));
    }

    #[test]
    fn registry_lookup_and_replacement() {
        struct Zero;
        impl ClosedFormRule for Zero {
            fn name(&self) -> &'static str {
                "dsc"
            }
            fn target(&self) -> Target {
                Target::Measure
            }
            fn description(&self) -> &'static str {
                "always zero"
            }
            fn hypotheses(&self, _: &BoundSubstitution, _: &ConditionReport) -> std::result::Result<String, String> {
                Ok(String::new())
            }
            fn value(&self, _: &BoundSubstitution, _: &Caps) -> Result<f64> {
                Ok(0.0)
            }
        }
        let mut reg = ClosedFormRegistry::builtin();
        let names = reg.names();
        assert_eq!(names, ["dsc", "isc-ipp", "top-dsc", "top-isc", "constant-length-recognisable"]);
        reg.register(Box::new(Zero));
        assert_eq!(reg.names(), names);
        let sub = fixtures::bound("random-fibonacci", &[]).unwrap();
        let rep = report(&sub);
        assert_eq!(reg.evaluate("dsc", &sub, &rep, &Caps::default()).unwrap().value, 0.0);
        assert!(matches!(
            ClosedFormRegistry::builtin().evaluate("dsc", &sub, &rep, &Caps::default()),
            Err(Error::HypothesesNotMet(_))
        ));
        assert!(reg.evaluate("nope", &sub, &rep, &Caps::default()).is_err());
    }
}
