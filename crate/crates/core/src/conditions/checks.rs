use std::collections::{BTreeSet, HashMap, HashSet};

use super::{
    CheckConfig, ConditionCheck, Finding, Geometric, IppVerdict, IppWitness, SetVerdict, SetWitness,
    UrpVerdict, UrpWitness,
};
use crate::error::{Error, Result};
use crate::inflate::Inflator;
use crate::lang::language;
use crate::spectral::{perron_data, substitution_matrix};
use crate::subst::{abelianise, BoundSubstitution, Letter, Word};
use crate::Caps;

const GEOMETRIC_TOLERANCE: f64 = 1e-9;
const IPP_TOLERANCE: f64 = 1e-12;

/// All realisations of each letter share one abelianisation.
pub fn check_compatible(sub: &BoundSubstitution) -> bool {
    let d = sub.size();
    sub.rules().iter().all(|rule| {
        let first = abelianise(d, &rule[0].0);
        rule.iter().all(|(w, _)| abelianise(d, w) == first)
    })
}

/// The common realisation length ℓ ≥ 2, if there is one.
pub fn check_constant_length(sub: &BoundSubstitution) -> Option<usize> {
    let ell = sub.rules()[0][0].0.len();
    let all = sub.rules().iter().flatten().all(|(w, _)| w.len() == ell);
    (all && ell >= 2).then_some(ell)
}

/// (λ, L) of the averaged matrix when L·Φ(s) = λ·L_a for every realisation
/// s ∈ ϑ(a). Any pair valid for all marginals is also Perron–Frobenius data
/// of their convex combination, which is unique up to scale.
pub fn check_geometric(sub: &BoundSubstitution) -> Result<Option<Geometric>> {
    let perron = perron_data(&substitution_matrix(sub))?;
    let d = sub.size();
    for (a, rule) in sub.rules().iter().enumerate() {
        let target = perron.lambda * perron.left[a];
        for (s, _) in rule {
            let phi = abelianise(d, s);
            let value: f64 = phi.0.iter().zip(&perron.left).map(|(&c, l)| c as f64 * l).sum();
            if (value - target).abs() > GEOMETRIC_TOLERANCE * target.abs().max(1.0) {
                return Ok(None);
            }
        }
    }
    Ok(Some(Geometric {
        lambda: perron.lambda,
        left: perron.left,
    }))
}

/// Injectivity of concatenation on ϑ^k(v₁) × … × ϑ^k(v_n) for legal v with
/// 2 ≤ |v| ≤ n_max, k ≤ k_max. Implied outright by geometric compatibility.
pub fn check_urp(sub: &BoundSubstitution, n_max: usize, k_max: usize, caps: &Caps) -> Result<UrpVerdict> {
    if check_geometric(sub)?.is_some() {
        return Ok(UrpVerdict::ImpliedByGeometric);
    }
    let al = sub.alphabet();
    let lang = language(sub, n_max.max(1), caps)?;
    let inflator = Inflator::new(sub, caps.clone());
    let mut work = 0usize;
    for k in 1..=k_max {
        let sets: Vec<Vec<Word>> = al
            .letters()
            .map(|a| inflator.realisations(a, k))
            .collect::<Result<_>>()?;
        for n in 2..=n_max {
            let mut witnesses = Vec::new();
            for v in &lang.slice(n).words {
                let factors: Vec<&Vec<Word>> = v.iter().map(|&a| &sets[a as usize]).collect();
                if !has_collision(&factors, &mut work, caps.tuples)? {
                    continue;
                }
                let count = factors.iter().fold(1usize, |acc, f| acc.saturating_mul(f.len()));
                if count > caps.tuples {
                    return Err(Error::size("realisation tuples", count, caps.tuples));
                }
                let (first, second, image) = first_collision(&factors).expect("a collision exists");
                let render = |choice: &[usize]| -> Vec<String> {
                    choice.iter().zip(&factors).map(|(&c, f)| al.render(&f[c])).collect()
                };
                witnesses.push(UrpWitness {
                    k,
                    word: al.render(v),
                    first: render(&first),
                    second: render(&second),
                    image: al.render(&image),
                });
            }
            if !witnesses.is_empty() {
                return Ok(UrpVerdict::Refuted { witnesses });
            }
        }
    }
    Ok(UrpVerdict::VerifiedTo { n_max, k_max })
}

/// Whether two distinct tuples in factors[0] × … × factors[n−1] have equal
/// concatenations. Searches states (ahead, behind, d): one tuple has used
/// `ahead` factors and overhangs the other, which has used `behind`, by d.
/// Each set must be sorted.
fn has_collision(factors: &[&Vec<Word>], work: &mut usize, cap: usize) -> Result<bool> {
    let n = factors.len();
    let mut seen: HashSet<(usize, usize, Vec<Letter>)> = HashSet::new();
    let mut stack: Vec<(usize, usize, Vec<Letter>)> = Vec::new();
    let charge = |work: &mut usize, by: usize| -> Result<()> {
        *work = work.saturating_add(by);
        if *work > cap {
            return Err(Error::size("realisation tuples", *work, cap));
        }
        Ok(())
    };
    // tuples agreeing on the first t factors and differing at factor t
    for (t, set) in factors.iter().enumerate() {
        for (i, u) in set.iter().enumerate() {
            charge(work, 1)?;
            for w in set[i + 1..].iter().take_while(|w| w.starts_with(u)) {
                let state = (t + 1, t + 1, w[u.len()..].to_vec());
                if seen.insert(state.clone()) {
                    stack.push(state);
                }
            }
        }
    }
    while let Some((ahead, behind, d)) = stack.pop() {
        if d.is_empty() && ahead == n && behind == n {
            return Ok(true);
        }
        if behind == n {
            continue;
        }
        let set = factors[behind];
        let mut next = Vec::new();
        // w a prefix of d
        for len in 1..=d.len() {
            if set.binary_search_by(|x| x.as_slice().cmp(&d[..len])).is_ok() {
                next.push((ahead, behind + 1, d[len..].to_vec()));
            }
        }
        // w extending d properly
        let start = set.partition_point(|x| x.as_slice() <= d.as_slice());
        for w in set[start..].iter().take_while(|w| w.starts_with(&d)) {
            next.push((behind + 1, ahead, w[d.len()..].to_vec()));
        }
        charge(work, 1 + d.len())?;
        for (a, b, rest) in next {
            if rest.is_empty() {
                for state in [(a, b, Vec::new()), (b, a, Vec::new())] {
                    if seen.insert(state.clone()) {
                        stack.push(state);
                    }
                }
            } else if seen.insert((a, b, rest.clone())) {
                stack.push((a, b, rest));
            }
        }
    }
    Ok(false)
}

/// First pair of tuples, in odometer order, with equal concatenations.
fn first_collision(factors: &[&Vec<Word>]) -> Option<(Vec<usize>, Vec<usize>, Vec<Letter>)> {
    let mut seen: HashMap<Vec<Letter>, Vec<usize>> = HashMap::new();
    let mut choice = vec![0usize; factors.len()];
    loop {
        let image: Vec<Letter> = choice
            .iter()
            .zip(factors)
            .flat_map(|(&c, f)| f[c].iter().copied())
            .collect();
        if let Some(prev) = seen.get(&image) {
            return Some((prev.clone(), choice, image));
        }
        seen.insert(image, choice.clone());
        let mut i = choice.len();
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < factors[i].len() {
                break;
            }
            choice[i] = 0;
        }
    }
}

/// A size cap hit at level k ≥ 2 leaves the check verified to level k − 1.
fn truncated(k: usize, e: Error) -> Result<usize> {
    match e {
        Error::SizeLimitExceeded { .. } if k > 1 => Ok(k - 1),
        e => Err(e),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum SetMode {
    Disjoint,
    Identical,
}

fn check_sets(sub: &BoundSubstitution, k_max: usize, caps: &Caps, mode: SetMode) -> Result<SetVerdict> {
    let al = sub.alphabet();
    let inflator = Inflator::new(sub, caps.clone());
    for k in 1..=k_max {
        for a in al.letters() {
            let support = sub.support(a);
            for i in 0..support.len() {
                for j in i + 1..support.len() {
                    let (u, v) = (support[i], support[j]);
                    let (du, dv) = match (inflator.word(u, k), inflator.word(v, k)) {
                        (Ok(du), Ok(dv)) => (du, dv),
                        (Err(e), _) | (_, Err(e)) => return truncated(k, e).map(|k_max| SetVerdict::VerifiedTo { k_max }),
                    };
                    let su: BTreeSet<Word> = du.support().into_iter().collect();
                    let sv: BTreeSet<Word> = dv.support().into_iter().collect();
                    let offending = match mode {
                        SetMode::Disjoint => su.intersection(&sv).next().cloned(),
                        SetMode::Identical => su.symmetric_difference(&sv).min().cloned(),
                    };
                    if let Some(word) = offending {
                        return Ok(SetVerdict::Refuted {
                            witness: SetWitness {
                                letter: al.symbol(a).to_string(),
                                u: al.render(u),
                                v: al.render(v),
                                k,
                                word: al.render(&word),
                            },
                        });
                    }
                }
            }
        }
    }
    Ok(SetVerdict::VerifiedTo { k_max })
}

/// ϑ^k(u) ∩ ϑ^k(v) = ∅ for distinct u, v ∈ ϑ(a), k ≤ k_max.
pub fn check_dsc(sub: &BoundSubstitution, k_max: usize, caps: &Caps) -> Result<SetVerdict> {
    check_sets(sub, k_max, caps, SetMode::Disjoint)
}

/// ϑ^k(u) = ϑ^k(v) for u, v ∈ ϑ(a), k ≤ k_max.
pub fn check_isc(sub: &BoundSubstitution, k_max: usize, caps: &Caps) -> Result<SetVerdict> {
    check_sets(sub, k_max, caps, SetMode::Identical)
}

/// Equal laws of ϑ_P^j(u₁) and ϑ_P^j(u₂) for u₁, u₂ ∈ ϑ(a), 1 ≤ j ≤ k_max.
/// Level 0 would compare the distinct words u₁ and u₂ themselves and is
/// skipped.
pub fn check_ipp(sub: &BoundSubstitution, k_max: usize, caps: &Caps) -> Result<IppVerdict> {
    if !check_isc(sub, k_max, caps)?.verified() {
        return Err(Error::HypothesesNotMet(
            "identical production probabilities need the identical set condition".into(),
        ));
    }
    let al = sub.alphabet();
    let inflator = Inflator::new(sub, caps.clone());
    for level in 1..=k_max {
        for a in al.letters() {
            let support = sub.support(a);
            for i in 0..support.len() {
                for j in i + 1..support.len() {
                    let (d1, d2) = match (inflator.word(support[i], level), inflator.word(support[j], level)) {
                        (Ok(d1), Ok(d2)) => (d1, d2),
                        (Err(e), _) | (_, Err(e)) => {
                            return truncated(level, e).map(|k_max| IppVerdict::VerifiedTo { k_max })
                        }
                    };
                    for (w, p1) in d1.iter() {
                        let p2 = d2.prob(w);
                        if (p1 - p2).abs() > IPP_TOLERANCE {
                            return Ok(IppVerdict::Refuted {
                                witness: IppWitness {
                                    letter: al.symbol(a).to_string(),
                                    u1: al.render(support[i]),
                                    u2: al.render(support[j]),
                                    level,
                                    word: al.render(w),
                                    p1,
                                    p2,
                                },
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(IppVerdict::VerifiedTo { k_max })
}

pub(super) struct Compatible;
pub(super) struct ConstantLength;
pub(super) struct GeometricCheck;
pub(super) struct Urp;
pub(super) struct Dsc;
pub(super) struct Isc;
pub(super) struct Ipp;

impl ConditionCheck for Compatible {
    fn name(&self) -> &'static str {
        "compatible"
    }
    fn description(&self) -> &'static str {
        "all realisations of a letter have the same letter counts"
    }
    fn run(&self, sub: &BoundSubstitution, _: &CheckConfig) -> Result<Finding> {
        Ok(Finding::Compatible(check_compatible(sub)))
    }
}

impl ConditionCheck for ConstantLength {
    fn name(&self) -> &'static str {
        "constant-length"
    }
    fn description(&self) -> &'static str {
        "all realisations have a common length of at least 2"
    }
    fn run(&self, sub: &BoundSubstitution, _: &CheckConfig) -> Result<Finding> {
        Ok(Finding::ConstantLength(check_constant_length(sub)))
    }
}

impl ConditionCheck for GeometricCheck {
    fn name(&self) -> &'static str {
        "geometric"
    }
    fn description(&self) -> &'static str {
        "one left eigenpair serves every marginal"
    }
    fn run(&self, sub: &BoundSubstitution, _: &CheckConfig) -> Result<Finding> {
        Ok(Finding::Geometric(check_geometric(sub)?))
    }
}

impl ConditionCheck for Urp {
    fn name(&self) -> &'static str {
        "urp"
    }
    fn description(&self) -> &'static str {
        "realisations of words determine the letterwise realisations"
    }
    fn run(&self, sub: &BoundSubstitution, cfg: &CheckConfig) -> Result<Finding> {
        Ok(Finding::Urp(check_urp(sub, cfg.n_max, cfg.k_max, &cfg.caps)?))
    }
}

impl ConditionCheck for Dsc {
    fn name(&self) -> &'static str {
        "dsc"
    }
    fn description(&self) -> &'static str {
        "distinct realisations of a letter have disjoint images"
    }
    fn run(&self, sub: &BoundSubstitution, cfg: &CheckConfig) -> Result<Finding> {
        Ok(Finding::Dsc(check_dsc(sub, cfg.k_max, &cfg.caps)?))
    }
}

impl ConditionCheck for Isc {
    fn name(&self) -> &'static str {
        "isc"
    }
    fn description(&self) -> &'static str {
        "realisations of a letter have identical image sets"
    }
    fn run(&self, sub: &BoundSubstitution, cfg: &CheckConfig) -> Result<Finding> {
        Ok(Finding::Isc(check_isc(sub, cfg.k_max, &cfg.caps)?))
    }
}

impl ConditionCheck for Ipp {
    fn name(&self) -> &'static str {
        "ipp"
    }
    fn description(&self) -> &'static str {
        "realisations of a letter induce identical image laws"
    }
    fn run(&self, sub: &BoundSubstitution, cfg: &CheckConfig) -> Result<Finding> {
        match check_ipp(sub, cfg.k_max, &cfg.caps) {
            Err(Error::HypothesesNotMet(_)) => Ok(Finding::Ipp(IppVerdict::NotApplicable)),
            other => other.map(Finding::Ipp),
        }
    }
}
