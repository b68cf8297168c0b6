//! Exact laws of inflation words.
//!
//! The level-(k+1) law of a letter is the mixture, over its realisations
//! s = s₁…s_r, of the concatenation product of the level-k laws of the s_i.
//! Equal concatenations are merged by summing probabilities, which realises
//! the decomposition sum over realisation paths exactly. Letter laws are
//! memoised by (letter, level), so word laws are assembled from them and
//! never recomputed.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::subst::{BoundSubstitution, Letter, Word};
use crate::Caps;

/// Finite law on words, stored in canonical word order.
#[derive(Debug, Clone, PartialEq)]
pub struct WordDistribution {
    entries: Vec<(Word, f64)>,
}

impl WordDistribution {
    pub fn point(word: Word) -> Self {
        Self {
            entries: vec![(word, 1.0)],
        }
    }

    /// Sorts, merges equal words and drops nothing.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Word, f64)>) -> Self {
        let mut map: HashMap<Word, f64> = HashMap::new();
        for (w, p) in pairs {
            *map.entry(w).or_insert(0.0) += p;
        }
        Self::from_map(map)
    }

    fn from_map(map: HashMap<Word, f64>) -> Self {
        let mut entries: Vec<(Word, f64)> = map.into_iter().collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, f64)> + '_ {
        self.entries.iter().map(|(w, p)| (w, *p))
    }

    pub fn entries(&self) -> &[(Word, f64)] {
        &self.entries
    }

    pub fn support(&self) -> Vec<Word> {
        self.entries.iter().map(|(w, _)| w.clone()).collect()
    }

    pub fn prob(&self, word: &[Letter]) -> f64 {
        self.entries
            .binary_search_by(|(w, _)| w.as_slice().cmp(word))
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        kahan_sum(self.entries.iter().map(|(_, p)| *p))
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        shannon(self.entries.iter().map(|(_, p)| *p))
    }

    /// Largest per-word probability difference against `other`.
    pub fn max_abs_diff(&self, other: &WordDistribution) -> f64 {
        let mut diff: f64 = 0.0;
        for (w, p) in self.iter() {
            diff = diff.max((p - other.prob(w)).abs());
        }
        for (w, p) in other.iter() {
            diff = diff.max((p - self.prob(w)).abs());
        }
        diff
    }

    /// Law of the concatenation of independent samples of `self` and `other`.
    pub fn concat(&self, other: &WordDistribution, cap: usize, what: &dyn Fn() -> String) -> Result<Self> {
        let size = self.len().saturating_mul(other.len());
        if size > cap {
            return Err(Error::size(what(), size, cap));
        }
        let mut map = HashMap::with_capacity(size);
        for (u, p) in &self.entries {
            for (v, q) in &other.entries {
                *map.entry(u.concat(v)).or_insert(0.0) += p * q;
            }
        }
        Ok(Self::from_map(map))
    }
}

/// φ(x) = −x log x with φ(0) = 0.
pub fn phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Σ φ(p) with compensated summation.
pub fn shannon(probs: impl IntoIterator<Item = f64>) -> f64 {
    kahan_sum(probs.into_iter().map(phi))
}

pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Per-letter entropies H_{k,a} of the level-k laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyVector {
    pub k: usize,
    pub values: Vec<f64>,
}

/// Per-letter log-counts q_{m,a} = log #ϑ^m(a).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountVector {
    pub m: usize,
    pub values: Vec<f64>,
}

type Memo = HashMap<(Letter, usize), Arc<WordDistribution>>;

/// Memoising engine for the laws of ϑ_P^k(a) and ϑ_P^k(w).
pub struct Inflator<'a> {
    sub: &'a BoundSubstitution,
    caps: Caps,
    memo: Mutex<Memo>,
}

impl<'a> Inflator<'a> {
    pub fn new(sub: &'a BoundSubstitution, caps: Caps) -> Self {
        Self {
            sub,
            caps,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn substitution(&self) -> &BoundSubstitution {
        self.sub
    }

    pub fn caps(&self) -> &Caps {
        &self.caps
    }

    /// Law of ϑ_P^k(a); level 0 is the point mass on a.
    pub fn letter(&self, a: Letter, k: usize) -> Result<Arc<WordDistribution>> {
        if k == 0 {
            return Ok(Arc::new(WordDistribution::point(Word::letter(a))));
        }
        if let Some(d) = self.memo.lock().unwrap().get(&(a, k)) {
            return Ok(d.clone());
        }
        let symbol = self.sub.alphabet().symbol(a);
        let what = || format!("distribution of level {k} for letter '{symbol}'");
        let mut mixture: HashMap<Word, f64> = HashMap::new();
        for (s, p) in self.sub.rule(a) {
            let image = self.product(s, k - 1, &what)?;
            for (w, q) in image.entries {
                *mixture.entry(w).or_insert(0.0) += p * q;
            }
            if mixture.len() > self.caps.support {
                return Err(Error::size(what(), mixture.len(), self.caps.support));
            }
        }
        let dist = Arc::new(WordDistribution::from_map(mixture));
        self.memo.lock().unwrap().insert((a, k), dist.clone());
        Ok(dist)
    }

    fn product(&self, word: &[Letter], k: usize, what: &dyn Fn() -> String) -> Result<WordDistribution> {
        let mut acc = WordDistribution::point(Word::empty());
        for &b in word {
            let next = self.letter(b, k)?;
            acc = acc.concat(&next, self.caps.support, what)?;
        }
        Ok(acc)
    }

    /// Law of ϑ_P^k(w): independent letterwise images, concatenated.
    pub fn word(&self, w: &[Letter], k: usize) -> Result<WordDistribution> {
        let alphabet = self.sub.alphabet();
        let what = || format!("distribution of level {k} for word '{}'", alphabet.render(w));
        self.product(w, k, &what)
    }

    /// ϑ^k(a) in canonical order.
    pub fn realisations(&self, a: Letter, k: usize) -> Result<Vec<Word>> {
        Ok(self.letter(a, k)?.support())
    }

    pub fn entropy_vector(&self, k: usize) -> Result<EntropyVector> {
        let values = self
            .letters_parallel(k)?
            .iter()
            .map(|d| d.entropy())
            .collect();
        Ok(EntropyVector { k, values })
    }

    pub fn count_vector(&self, m: usize) -> Result<CountVector> {
        let values = self
            .letters_parallel(m)?
            .iter()
            .map(|d| (d.len() as f64).ln())
            .collect();
        Ok(CountVector { m, values })
    }

    /// Level-k laws of all letters. Lower levels are built first so the
    /// parallel pass only reads the memo for level k − 1.
    fn letters_parallel(&self, k: usize) -> Result<Vec<Arc<WordDistribution>>> {
        let letters: Vec<Letter> = self.sub.alphabet().letters().collect();
        for level in 1..k {
            letters
                .par_iter()
                .map(|&a| self.letter(a, level).map(|_| ()))
                .collect::<Result<Vec<()>>>()?;
        }
        letters.par_iter().map(|&a| self.letter(a, k)).collect()
    }
}

pub fn inflate_distribution(sub: &BoundSubstitution, a: Letter, k: usize, caps: &Caps) -> Result<WordDistribution> {
    Ok((*Inflator::new(sub, caps.clone()).letter(a, k)?).clone())
}

pub fn word_distribution(sub: &BoundSubstitution, w: &[Letter], k: usize, caps: &Caps) -> Result<WordDistribution> {
    Inflator::new(sub, caps.clone()).word(w, k)
}

pub fn realisation_set(sub: &BoundSubstitution, a: Letter, k: usize, caps: &Caps) -> Result<Vec<Word>> {
    Inflator::new(sub, caps.clone()).realisations(a, k)
}

pub fn entropy_vector(sub: &BoundSubstitution, k: usize, caps: &Caps) -> Result<EntropyVector> {
    Inflator::new(sub, caps.clone()).entropy_vector(k)
}

pub fn count_vector(sub: &BoundSubstitution, m: usize, caps: &Caps) -> Result<CountVector> {
    Inflator::new(sub, caps.clone()).count_vector(m)
}
