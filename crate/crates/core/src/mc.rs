//! Monte Carlo cross-checks of the exact computations.
//!
//! Trials are split into fixed-size chunks; chunk c draws from a ChaCha8
//! stream c of the master seed, so results do not depend on how rayon
//! schedules the chunks.

use std::collections::{BTreeMap, HashMap};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::inflate::inflate_distribution;
use crate::spectral::{perron_data, substitution_matrix};
use crate::subst::{BoundSubstitution, Letter, Word};
use crate::Caps;

/// Trials per random stream.
pub const CHUNK: usize = 1024;
/// Bins with a smaller expected count are pooled before the χ² test.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleStats {
    pub trials: usize,
    pub empirical: BTreeMap<Word, u64>,
    pub tv_distance: f64,
    pub chi_square: ChiSquare,
    pub seed: u64,
}

/// Letterwise sampler for one substitution.
pub struct Sampler<'a> {
    sub: &'a BoundSubstitution,
    choosers: Vec<WeightedIndex<f64>>,
}

impl<'a> Sampler<'a> {
    pub fn new(sub: &'a BoundSubstitution) -> Result<Self> {
        let choosers = sub
            .rules()
            .iter()
            .enumerate()
            .map(|(a, rule)| {
                WeightedIndex::new(rule.iter().map(|(_, p)| *p)).map_err(|e| Error::DegenerateProbabilities {
                    letter: sub.alphabet().symbol(a as Letter).to_string(),
                    detail: e.to_string(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { sub, choosers })
    }

    /// One realisation of ϑ_P(w), drawing each letter independently.
    pub fn apply<R: Rng>(&self, w: &[Letter], rng: &mut R) -> Vec<Letter> {
        let mut out = Vec::with_capacity(w.len() * self.sub.max_len());
        for &a in w {
            let i = self.choosers[a as usize].sample(rng);
            out.extend_from_slice(&self.sub.rule(a)[i].0);
        }
        out
    }

    /// One realisation of ϑ_P^k(w), level by level.
    pub fn inflate<R: Rng>(&self, w: &[Letter], k: usize, rng: &mut R) -> Vec<Letter> {
        let mut cur = w.to_vec();
        for _ in 0..k {
            cur = self.apply(&cur, rng);
        }
        cur
    }
}

/// Runs `f` on every trial index with its chunk's generator and folds the
/// per-chunk results in chunk order.
fn chunked<T, F>(trials: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(trials - c * CHUNK);
            f(n, &mut rng)
        })
        .collect()
}

fn check_counts(k: usize, trials: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain {
            function: "sample_inflation (k)",
            value: 0.0,
        });
    }
    if trials == 0 {
        return Err(Error::Domain {
            function: "sample_inflation (trials)",
            value: 0.0,
        });
    }
    Ok(())
}

/// Pearson χ² of observed counts against exact probabilities, pooling the
/// sparsest bins until every pooled bin expects at least [`MIN_EXPECTED`].
pub fn chi_square(observed: &BTreeMap<Word, u64>, exact: &[(Word, f64)], trials: usize) -> ChiSquare {
    let n = trials as f64;
    let mut bins: Vec<(f64, f64)> = exact
        .iter()
        .map(|(w, p)| (p * n, observed.get(w).copied().unwrap_or(0) as f64))
        .collect();
    let known: u64 = exact.iter().filter_map(|(w, _)| observed.get(w)).sum();
    let stray = trials as u64 - known;
    bins.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, stray as f64);
    for (e, o) in bins {
        acc.0 += e;
        acc.1 += o;
        if acc.0 >= MIN_EXPECTED {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 > 0.0 || acc.1 > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => pooled.push(acc),
        }
    }
    let statistic: f64 = pooled
        .iter()
        .map(|&(e, o)| if e > 0.0 { (o - e).powi(2) / e } else if o > 0.0 { f64::INFINITY } else { 0.0 })
        .sum();
    let dof = pooled.len().saturating_sub(1);
    let p_value = if dof == 0 {
        if statistic == 0.0 { 1.0 } else { 0.0 }
    } else if statistic.is_finite() {
        ChiSquared::new(dof as f64).map_or(0.0, |d| 1.0 - d.cdf(statistic))
    } else {
        0.0
    };
    ChiSquare {
        statistic,
        dof,
        p_value,
    }
}

/// Draws `trials` realisations of ϑ_P^k(a) and compares them with the exact law.
pub fn sample_inflation(
    sub: &BoundSubstitution,
    a: Letter,
    k: usize,
    trials: usize,
    seed: u64,
    caps: &Caps,
) -> Result<SampleStats> {
    check_counts(k, trials)?;
    let exact = inflate_distribution(sub, a, k, caps)?;
    let sampler = Sampler::new(sub)?;
    let parts = chunked(trials, seed, |n, rng| {
        let mut counts: HashMap<Vec<Letter>, u64> = HashMap::new();
        for _ in 0..n {
            *counts.entry(sampler.inflate(&[a], k, rng)).or_default() += 1;
        }
        counts
    });
    let mut empirical: BTreeMap<Word, u64> = BTreeMap::new();
    for part in parts {
        for (w, c) in part {
            *empirical.entry(Word::from_vec(w)).or_default() += c;
        }
    }
    let n = trials as f64;
    let exact_pairs: Vec<(Word, f64)> = exact.iter().map(|(w, p)| (w.clone(), p)).collect();
    let mut tv = 0.0;
    for (w, p) in &exact_pairs {
        let e = empirical.get(w).copied().unwrap_or(0) as f64 / n;
        tv += (e - p).abs();
    }
    for (w, &c) in &empirical {
        if exact.prob(w) == 0.0 {
            tv += c as f64 / n;
        }
    }
    let chi_square = chi_square(&empirical, &exact_pairs, trials);
    Ok(SampleStats {
        trials,
        empirical,
        tv_distance: (tv / 2.0).clamp(0.0, 1.0),
        chi_square,
        seed,
    })
}

/// Per-sample subword frequencies |w|_v / (|w| − n + 1), averaged over
/// `trials` samples w of ϑ_P^k(a).
pub fn empirical_word_frequencies(
    sub: &BoundSubstitution,
    a: Letter,
    k: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<BTreeMap<Word, f64>> {
    check_counts(k.max(1), trials)?;
    if n == 0 {
        return Err(Error::Domain {
            function: "empirical_word_frequencies (n)",
            value: 0.0,
        });
    }
    let sampler = Sampler::new(sub)?;
    let parts = chunked(trials, seed, |count, rng| {
        let mut sums: HashMap<Vec<Letter>, f64> = HashMap::new();
        for _ in 0..count {
            let w = sampler.inflate(&[a], k, rng);
            if w.len() < n {
                return Err(Error::Domain {
                    function: "empirical_word_frequencies (sample shorter than n)",
                    value: w.len() as f64,
                });
            }
            let windows = w.len() - n + 1;
            let mut local: HashMap<&[Letter], usize> = HashMap::new();
            for v in w.windows(n) {
                *local.entry(v).or_default() += 1;
            }
            for (v, c) in local {
                *sums.entry(v.to_vec()).or_default() += c as f64 / windows as f64;
            }
        }
        Ok(sums)
    });
    let mut out: BTreeMap<Word, f64> = BTreeMap::new();
    for part in parts {
        for (v, s) in part? {
            *out.entry(Word::from_vec(v)).or_default() += s;
        }
    }
    for f in out.values_mut() {
        *f /= trials as f64;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthConcentration {
    pub m: usize,
    pub lambda: f64,
    pub eps: f64,
    /// Samples of |ϑ_P(v₂…v_m)| / m.
    pub ratios: Vec<f64>,
    /// Share of `ratios` inside [λ − ε, λ + ε].
    pub fraction_within: f64,
}

/// Samples legal words v of length m as windows of inflation words, then
/// |ϑ_P(v₂…v_m)| / m, which concentrates around λ as m grows.
pub fn length_concentration(
    sub: &BoundSubstitution,
    m: usize,
    trials: usize,
    eps: f64,
    seed: u64,
) -> Result<LengthConcentration> {
    check_counts(1, trials)?;
    if m < 2 {
        return Err(Error::Domain {
            function: "length_concentration (m)",
            value: m as f64,
        });
    }
    let lambda = perron_data(&substitution_matrix(sub))?.lambda;
    let sampler = Sampler::new(sub)?;
    let parts = chunked(trials, seed, |count, rng| {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut w = vec![0 as Letter];
            // a few extra levels so the window sits deep inside the word
            while w.len() < 4 * m {
                w = sampler.apply(&w, rng);
            }
            let start = rng.random_range(0..=w.len() - m);
            let v = &w[start..start + m];
            out.push(sampler.apply(&v[1..], rng).len() as f64 / m as f64);
        }
        out
    });
    let ratios: Vec<f64> = parts.into_iter().flatten().collect();
    let within = ratios.iter().filter(|r| (**r - lambda).abs() <= eps).count();
    Ok(LengthConcentration {
        m,
        lambda,
        eps,
        fraction_within: within as f64 / ratios.len() as f64,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn deterministic_sampling_is_exact() {
        let sub = fixtures::fibonacci();
        let stats = sample_inflation(&sub, 0, 5, 100, 1, &Caps::default()).unwrap();
        assert_eq!(stats.empirical.len(), 1);
        assert_eq!(stats.tv_distance, 0.0);
        assert_eq!(stats.chi_square.p_value, 1.0);
    }

    #[test]
    fn counts_sum_to_trials_and_runs_repeat() {
        let sub = fixtures::bound("example-2.10", &[]).unwrap();
        let caps = Caps::default();
        let s1 = sample_inflation(&sub, 0, 3, 5000, 42, &caps).unwrap();
        let s2 = sample_inflation(&sub, 0, 3, 5000, 42, &caps).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.empirical.values().sum::<u64>(), 5000);
        let s3 = sample_inflation(&sub, 0, 3, 5000, 43, &caps).unwrap();
        assert_ne!(s1.empirical, s3.empirical);
    }

    #[test]
    fn pooling_keeps_bins_above_threshold() {
        let w = |i: u8| Word::from_vec(vec![i]);
        let exact = vec![(w(0), 0.97), (w(1), 0.01), (w(2), 0.01), (w(3), 0.01)];
        let observed: BTreeMap<Word, u64> = [(w(0), 97), (w(1), 1), (w(2), 1), (w(3), 1)].into();
        let chi = chi_square(&observed, &exact, 100);
        assert_eq!(chi.dof, 0);
        assert_eq!(chi.statistic, 0.0);
    }

    #[test]
    fn full_length_window_is_an_indicator() {
        let sub = fixtures::fibonacci();
        let f = empirical_word_frequencies(&sub, 0, 4, 8, 1, 0).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.values().next(), Some(&1.0));
        assert!(empirical_word_frequencies(&sub, 0, 4, 9, 1, 0).is_err());
    }
}
