//! Word frequencies of the frequency measure μ_P.
//!
//! For legal words w, v of length n the induced operator is
//!
//! ```text
//! T[w, v] = (1/λ) Σ_{j=1}^{|ϑ(v₁)|} P[ϑ_P(v)[j, j+n−1] = w]
//! ```
//!
//! and the vector of cylinder masses on L^n is its fixed point. T is
//! assembled column by column: each realisation s of ϑ(v₁) is paired with the
//! law of ϑ_P(v₂…v_n), and every window starting inside s is credited. The
//! same relation holds when v is longer than w as long as every window fits,
//! which lets masses of long words be lifted from a shorter table.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::conditions::{CheckConfig, ConditionReport, Recognisability};
use crate::entropy;
use crate::error::{Error, Result};
use crate::inflate::{kahan_sum, Inflator};
use crate::lang::{language, LanguageSet};
use crate::spectral::{perron_data, substitution_matrix};
use crate::subst::{BoundSubstitution, Letter, Word};
use crate::Caps;

pub const FIXED_POINT_TOLERANCE: f64 = 1e-15;
pub const FIXED_POINT_MAX_ITERATIONS: usize = 1_000_000;
/// Allowed drift of the dominant eigenvalue of T from 1.
pub const EIGENVALUE_TOLERANCE: f64 = 1e-8;
/// Longest length computed directly from the operator when lifting.
const LIFT_BASE: usize = 3;

/// Sparse induced operator, stored by rows.
#[derive(Debug, Clone)]
pub struct InducedOperator {
    pub n: usize,
    pub lambda: f64,
    pub words: LanguageSet,
    rows: Vec<Vec<(usize, f64)>>,
}

impl InducedOperator {
    pub fn dim(&self) -> usize {
        self.words.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn entry(&self, w: usize, v: usize) -> f64 {
        self.rows[w]
            .binary_search_by_key(&v, |&(c, _)| c)
            .map(|i| self.rows[w][i].1)
            .unwrap_or(0.0)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .par_iter()
            .map(|row| row.iter().map(|&(c, t)| t * x[c]).sum())
            .collect()
    }

    /// ‖Tx − x‖∞.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.apply(x)
            .iter()
            .zip(x)
            .map(|(y, x)| (y - x).abs())
            .fold(0.0, f64::max)
    }
}

pub fn induced_operator(sub: &BoundSubstitution, n: usize, caps: &Caps) -> Result<InducedOperator> {
    let lambda = perron_data(&substitution_matrix(sub))?.lambda;
    let lang = language(sub, n, caps)?;
    let words = lang.slice(n).clone();
    let inflator = Inflator::new(sub, caps.clone());
    let columns: Vec<Vec<(usize, f64)>> = words
        .words
        .par_iter()
        .map(|v| {
            let tail = inflator.word(&v[1..], 1)?;
            let mut col: HashMap<usize, f64> = HashMap::new();
            for (s, ps) in sub.rule(v[0]) {
                for (t, pt) in tail.iter() {
                    let z: Vec<Letter> = s.iter().chain(t.iter()).copied().collect();
                    for j in 0..s.len() {
                        let w = &z[j..j + n];
                        let row = words.index_of(w).expect("windows of legal images are legal");
                        *col.entry(row).or_insert(0.0) += ps * pt / lambda;
                    }
                }
            }
            let mut col: Vec<(usize, f64)> = col.into_iter().collect();
            col.sort_unstable_by_key(|&(r, _)| r);
            Ok(col)
        })
        .collect::<Result<_>>()?;
    let mut rows = vec![Vec::new(); words.len()];
    for (c, col) in columns.into_iter().enumerate() {
        for (r, t) in col {
            rows[r].push((c, t));
        }
    }
    Ok(InducedOperator {
        n,
        lambda,
        words,
        rows,
    })
}

/// Fixed point of T with Σ = 1, by damped power iteration x ← (x + Tx)/2.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// ‖Tx‖₁ / ‖x‖₁ at the returned vector.
    pub eigenvalue: f64,
    pub residual: f64,
}

pub fn fixed_point(op: &InducedOperator) -> Result<FixedPoint> {
    let dim = op.dim();
    let mut x = vec![1.0 / dim as f64; dim];
    for iterations in 1..=FIXED_POINT_MAX_ITERATIONS {
        let tx = op.apply(&x);
        let mut next: Vec<f64> = x.iter().zip(&tx).map(|(a, b)| 0.5 * (a + b)).collect();
        let total = kahan_sum(next.iter().copied());
        next.iter_mut().for_each(|v| *v /= total);
        let change = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = next;
        if change < FIXED_POINT_TOLERANCE {
            let tx = op.apply(&x);
            return Ok(FixedPoint {
                eigenvalue: kahan_sum(tx.iter().copied()),
                residual: op.residual(&x),
                vector: x,
                iterations,
            });
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: FIXED_POINT_MAX_ITERATIONS,
    })
}

/// Cylinder masses of all legal words of length 1..=n.
#[derive(Debug, Clone, Serialize)]
pub struct FrequencyTable {
    pub n: usize,
    #[serde(skip)]
    slices: Vec<Vec<(Word, f64)>>,
    /// ‖Tμ − μ‖∞ at the top length.
    pub fixed_point_residual: f64,
    pub eigenvalue: f64,
    pub warning: Option<String>,
}

impl FrequencyTable {
    /// Builds a table from explicit slices; slice i holds words of length i + 1.
    pub fn from_slices(slices: Vec<Vec<(Word, f64)>>) -> Self {
        let mut slices = slices;
        for s in &mut slices {
            s.sort_by(|a, b| a.0.cmp(&b.0));
        }
        Self {
            n: slices.len(),
            slices,
            fixed_point_residual: 0.0,
            eigenvalue: 1.0,
            warning: None,
        }
    }

    pub fn slice(&self, len: usize) -> &[(Word, f64)] {
        &self.slices[len - 1]
    }

    pub fn slice_mut(&mut self, len: usize) -> &mut [(Word, f64)] {
        &mut self.slices[len - 1]
    }

    pub fn get(&self, w: &[Letter]) -> f64 {
        if w.is_empty() || w.len() > self.n {
            return 0.0;
        }
        let slice = self.slice(w.len());
        slice
            .binary_search_by(|(x, _)| x.as_slice().cmp(w))
            .map(|i| slice[i].1)
            .unwrap_or(0.0)
    }

    pub fn slice_total(&self, len: usize) -> f64 {
        kahan_sum(self.slice(len).iter().map(|(_, f)| *f))
    }
}

pub fn word_frequencies(sub: &BoundSubstitution, n: usize, caps: &Caps) -> Result<FrequencyTable> {
    let op = induced_operator(sub, n, caps)?;
    let fp = fixed_point(&op)?;
    let top: Vec<(Word, f64)> = op.words.words.iter().cloned().zip(fp.vector.iter().copied()).collect();
    let mut slices = vec![Vec::new(); n];
    for m in (1..n).rev() {
        let mut acc: BTreeMap<&[Letter], f64> = BTreeMap::new();
        for (w, f) in &top {
            *acc.entry(&w[..m]).or_insert(0.0) += f;
        }
        slices[m - 1] = acc.into_iter().map(|(u, f)| (Word::from_vec(u.to_vec()), f)).collect();
    }
    slices[n - 1] = top;
    let warning = ((fp.eigenvalue - 1.0).abs() > EIGENVALUE_TOLERANCE)
        .then(|| format!("dominant eigenvalue of the induced operator is {}", fp.eigenvalue));
    Ok(FrequencyTable {
        n,
        slices,
        fixed_point_residual: fp.residual,
        eigenvalue: fp.eigenvalue,
        warning,
    })
}

/// max over v of |freq(v) − Σ_x freq(vx)| and |freq(v) − Σ_x freq(xv)|.
pub fn consistency_residual(table: &FrequencyTable) -> f64 {
    let mut worst: f64 = 0.0;
    for m in 1..table.n {
        let mut right: HashMap<&[Letter], f64> = HashMap::new();
        let mut left: HashMap<&[Letter], f64> = HashMap::new();
        for (w, f) in table.slice(m + 1) {
            *right.entry(&w[..m]).or_insert(0.0) += f;
            *left.entry(&w[1..]).or_insert(0.0) += f;
        }
        for (v, f) in table.slice(m) {
            let r = right.get(v.as_slice()).copied().unwrap_or(0.0);
            let l = left.get(v.as_slice()).copied().unwrap_or(0.0);
            worst = worst.max((f - r).abs()).max((f - l).abs());
        }
        // mass on length-(m+1) words whose boundary subwords are missing
        for (u, f) in right.iter().chain(left.iter()) {
            if table.get(u) == 0.0 {
                worst = worst.max(*f);
            }
        }
    }
    worst
}

/// Masses of all legal words of length n. Uses the operator directly for
/// short lengths and otherwise lifts from length ⌈(n−1)/ℓ_min⌉ + 1, where
/// ℓ_min is the shortest realisation length.
pub fn frequencies_at_length(sub: &BoundSubstitution, n: usize, caps: &Caps) -> Result<BTreeMap<Word, f64>> {
    let min_len = sub.min_len();
    let shorter = (n - 1).div_ceil(min_len.max(1)) + 1;
    if n <= LIFT_BASE || shorter >= n {
        let table = word_frequencies(sub, n, caps)?;
        return Ok(table.slice(n).iter().cloned().collect());
    }
    let base = frequencies_at_length(sub, shorter, caps)?;
    let lambda = perron_data(&substitution_matrix(sub))?.lambda;
    let inflator = Inflator::new(sub, caps.clone());
    let mut out: HashMap<Vec<Letter>, f64> = HashMap::new();
    for (v, mass) in &base {
        let tail = inflator.word(&v[1..], 1)?;
        for (s, ps) in sub.rule(v[0]) {
            for (t, pt) in tail.iter() {
                let z: Vec<Letter> = s.iter().chain(t.iter()).copied().collect();
                for j in 0..s.len() {
                    *out.entry(z[j..j + n].to_vec()).or_insert(0.0) += mass * ps * pt / lambda;
                }
            }
        }
        if out.len() > caps.language {
            return Err(Error::size("lifted frequency table", out.len(), caps.language));
        }
    }
    Ok(out.into_iter().map(|(w, f)| (Word::from_vec(w), f)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsReport {
    /// Entropy used in the envelope, from the topological closed form.
    pub h: f64,
    pub c1: f64,
    pub c2: f64,
    pub violations: usize,
    pub words_checked: usize,
    pub m_max: usize,
}

/// Envelope constants of μ_P([w])·|w|·e^{|w|h} over w ∈ ϑ^m(a), m ≤ m_max.
pub fn gibbs_check(sub: &BoundSubstitution, m_max: usize, caps: &Caps) -> Result<GibbsReport> {
    let cfg = CheckConfig {
        caps: caps.clone(),
        ..CheckConfig::default()
    };
    let report = ConditionReport::compute(sub, &cfg)?;
    let unmet = |why: &str| Err(Error::HypothesesNotMet(why.to_string()));
    if report.constant_length.is_none() {
        return unmet("not of constant length");
    }
    if !matches!(report.recognisable, Recognisability::Found { .. }) {
        return unmet("recognisability not established");
    }
    if entropy::intrinsic_ergodicity_hypothesis(sub, &report).is_none() {
        return unmet("neither equal cardinalities nor a single non-zero eigenvalue");
    }
    if !sub.is_uniform() {
        return unmet("probabilities are not uniform");
    }
    if sub.is_deterministic() {
        return unmet("no letter has two realisations");
    }
    let h = entropy::top_entropy_closed(sub, &report, caps)?.value;
    let inflator = Inflator::new(sub, caps.clone());
    let mut tables: BTreeMap<usize, BTreeMap<Word, f64>> = BTreeMap::new();
    let (mut c1, mut c2, mut violations, mut words_checked) = (f64::INFINITY, 0.0f64, 0, 0);
    for m in 1..=m_max {
        for a in sub.alphabet().letters() {
            for w in inflator.realisations(a, m)? {
                let table = match tables.entry(w.len()) {
                    std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
                    std::collections::btree_map::Entry::Vacant(e) => e.insert(frequencies_at_length(sub, w.len(), caps)?),
                };
                let mass = table.get(&w).copied().unwrap_or(0.0);
                let c = mass * w.len() as f64 * (w.len() as f64 * h).exp();
                words_checked += 1;
                if mass <= 0.0 || mass.is_nan() || !c.is_finite() {
                    violations += 1;
                    continue;
                }
                c1 = c1.min(c);
                c2 = c2.max(c);
            }
        }
    }
    Ok(GibbsReport {
        h,
        c1,
        c2,
        violations,
        words_checked,
        m_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    #[test]
    fn letter_frequencies_are_right_eigenvector() {
        for p in [0.2, 0.5] {
            let sub = fixtures::bound("period-doubling", &[("p", p)]).unwrap();
            let t = word_frequencies(&sub, 1, &Caps::default()).unwrap();
            assert_abs_diff_eq!(t.get(&[0]), 2.0 / 3.0, epsilon = 1e-12);
            assert_abs_diff_eq!(t.get(&[1]), 1.0 / 3.0, epsilon = 1e-12);
        }
        let fib = fixtures::fibonacci();
        let t = word_frequencies(&fib, 1, &Caps::default()).unwrap();
        let tau = (1.0 + 5f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(t.get(&[0]), 1.0 / tau, epsilon = 1e-12);
        assert_abs_diff_eq!(t.get(&[1]), 1.0 / (tau * tau), epsilon = 1e-12);
    }

    #[test]
    fn period_doubling_pairs() {
        let sub = fixtures::bound("period-doubling", &[("p", 0.3)]).unwrap();
        let op = induced_operator(&sub, 2, &Caps::default()).unwrap();
        assert_eq!(op.dim(), 4);
        let fp = fixed_point(&op).unwrap();
        assert!(fp.residual < 1e-9);
        assert_abs_diff_eq!(fp.eigenvalue, 1.0, epsilon = 1e-9);
        let t = word_frequencies(&sub, 2, &Caps::default()).unwrap();
        assert_abs_diff_eq!(t.slice_total(2), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_sofic_pairs() {
        let sub = fixtures::bound("example-5.6", &[("p", 0.5)]).unwrap();
        let t = word_frequencies(&sub, 2, &Caps::default()).unwrap();
        assert_abs_diff_eq!(t.get(&[0, 1]), t.get(&[1, 0]), epsilon = 1e-12);
    }

    #[test]
    fn residual_detects_perturbation() {
        let sub = fixtures::fibonacci();
        let mut t = word_frequencies(&sub, 3, &Caps::default()).unwrap();
        assert!(consistency_residual(&t) < 1e-10);
        t.slice_mut(2)[0].1 += 1e-3;
        assert!(consistency_residual(&t) >= 1e-3 - 1e-8);
    }

    #[test]
    fn lift_matches_direct_operator() {
        let sub = fixtures::bound("example-5.1", &[]).unwrap();
        let caps = Caps::default();
        let direct = word_frequencies(&sub, 5, &caps).unwrap();
        let lifted = frequencies_at_length(&sub, 5, &caps).unwrap();
        assert_eq!(lifted.len(), direct.slice(5).len());
        for (w, f) in direct.slice(5) {
            assert_abs_diff_eq!(lifted[w], *f, epsilon = 1e-12);
        }
    }

    #[test]
    fn gibbs_guards() {
        let caps = Caps::default();
        let pd = fixtures::bound("period-doubling", &[]).unwrap();
        assert!(matches!(gibbs_check(&pd, 2, &caps), Err(Error::HypothesesNotMet(_))));
        assert!(matches!(gibbs_check(&fixtures::fibonacci(), 2, &caps), Err(Error::HypothesesNotMet(_))));
    }
}
