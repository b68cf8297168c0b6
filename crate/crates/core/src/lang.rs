//! Legal words and word-count growth.
//!
//! The language up to length n is computed as a closure: start from the
//! letters and repeatedly add every subword of length at most n of every
//! realisation of ϑ(u) for words u already found. A legal word w is a subword
//! of ϑ(v) for some legal v with |v| ≤ |w|, because every letter has a
//! non-empty image. Hence the closure reaches all of L^{≤n}, and reaching a
//! state where no new word appears certifies that the enumeration is exact.

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{check_primitive, substitution_matrix};
use crate::subst::{BoundSubstitution, Letter, Word};
use crate::Caps;

/// Legal words of one length, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LanguageSet {
    pub n: usize,
    #[serde(skip)]
    pub words: Vec<Word>,
}

impl LanguageSet {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, w: &[Letter]) -> bool {
        self.words.binary_search_by(|x| x.as_slice().cmp(w)).is_ok()
    }

    pub fn index_of(&self, w: &[Letter]) -> Option<usize> {
        self.words.binary_search_by(|x| x.as_slice().cmp(w)).ok()
    }
}

/// All legal words of length 1..=n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Language {
    slices: Vec<LanguageSet>,
    /// Closure rounds until no new word appeared.
    pub rounds: usize,
}

impl Language {
    pub fn max_len(&self) -> usize {
        self.slices.len()
    }

    pub fn slice(&self, n: usize) -> &LanguageSet {
        &self.slices[n - 1]
    }

    pub fn contains(&self, w: &[Letter]) -> bool {
        !w.is_empty() && w.len() <= self.max_len() && self.slice(w.len()).contains(w)
    }

    pub fn total(&self) -> usize {
        self.slices.iter().map(LanguageSet::len).sum()
    }
}

pub fn ensure_primitive(sub: &BoundSubstitution) -> Result<()> {
    if check_primitive(&substitution_matrix(sub)).primitive {
        Ok(())
    } else {
        Err(Error::NotPrimitive)
    }
}

/// L^{≤n} by closure to a fixed point.
pub fn language(sub: &BoundSubstitution, n: usize, caps: &Caps) -> Result<Language> {
    ensure_primitive(sub)?;
    if n == 0 {
        return Err(Error::Domain {
            function: "legal_words",
            value: 0.0,
        });
    }
    // a word of length ≤ n inside ϑ(v) lies in the image of at most `cover`
    // consecutive letters of v, so longer words need not be expanded
    let cover = n.min((n - 1).div_ceil(sub.min_len()) + 1);
    let mut found: HashSet<Vec<Letter>> = sub.alphabet().letters().map(|a| vec![a]).collect();
    let mut frontier: Vec<Vec<Letter>> = found.iter().cloned().collect();
    let mut rounds = 0;
    while !frontier.is_empty() {
        rounds += 1;
        let produced: Vec<HashSet<Vec<Letter>>> = frontier
            .par_iter()
            .map(|u| image_subwords(sub, u, n))
            .collect();
        let mut next = Vec::new();
        for set in produced {
            for w in set {
                if !found.contains(&w) {
                    if w.len() <= cover {
                        next.push(w.clone());
                    }
                    found.insert(w);
                }
            }
        }
        if found.len() > caps.language {
            return Err(Error::size("language", found.len(), caps.language));
        }
        frontier = next;
    }
    let mut by_len: Vec<BTreeSet<Vec<Letter>>> = vec![BTreeSet::new(); n];
    for w in found {
        by_len[w.len() - 1].insert(w);
    }
    let slices = by_len
        .into_iter()
        .enumerate()
        .map(|(i, set)| LanguageSet {
            n: i + 1,
            words: set.into_iter().map(Word::from_vec).collect(),
        })
        .collect();
    Ok(Language { slices, rounds })
}

/// Subwords of length ≤ n of all realisations of ϑ(u).
fn image_subwords(sub: &BoundSubstitution, u: &[Letter], n: usize) -> HashSet<Vec<Letter>> {
    let mut out = HashSet::new();
    let rules: Vec<&[(Word, f64)]> = u.iter().map(|&a| sub.rule(a)).collect();
    let mut choice = vec![0usize; u.len()];
    let mut image = Vec::new();
    loop {
        image.clear();
        for (rule, &c) in rules.iter().zip(&choice) {
            image.extend_from_slice(&rule[c].0);
        }
        for start in 0..image.len() {
            for len in 1..=n.min(image.len() - start) {
                out.insert(image[start..start + len].to_vec());
            }
        }
        let mut i = choice.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < rules[i].len() {
                break;
            }
            choice[i] = 0;
        }
    }
}

pub fn legal_words(sub: &BoundSubstitution, n: usize, caps: &Caps) -> Result<LanguageSet> {
    Ok(language(sub, n, caps)?.slices.swap_remove(n - 1))
}

pub fn is_legal(sub: &BoundSubstitution, w: &[Letter], caps: &Caps) -> Result<bool> {
    Ok(legal_words(sub, w.len().max(1), caps)?.contains(w))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRow {
    pub n: usize,
    pub count: usize,
    /// log(count)/n, an upper estimate of the topological entropy.
    pub rate: f64,
}

pub fn language_growth(sub: &BoundSubstitution, n_max: usize, caps: &Caps) -> Result<Vec<GrowthRow>> {
    let lang = language(sub, n_max, caps)?;
    Ok((1..=n_max)
        .map(|n| {
            let count = lang.slice(n).len();
            GrowthRow {
                n,
                count,
                rate: (count as f64).ln() / n as f64,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn strings(sub: &BoundSubstitution, set: &LanguageSet) -> Vec<String> {
        set.words.iter().map(|w| sub.alphabet().render(w)).collect()
    }

    #[test]
    fn period_doubling_short_words() {
        let sub = fixtures::bound("period-doubling", &[]).unwrap();
        let caps = Caps::default();
        assert_eq!(strings(&sub, &legal_words(&sub, 1, &caps).unwrap()), vec!["a", "b"]);
        assert_eq!(
            strings(&sub, &legal_words(&sub, 2, &caps).unwrap()),
            vec!["aa", "ab", "ba", "bb"]
        );
        assert!(is_legal(&sub, &sub.alphabet().parse_word("bb").unwrap(), &caps).unwrap());
    }

    #[test]
    fn golden_mean_perturbation_admits_bb() {
        // b -> abb makes every power of b legal once eps > 0
        for eps in [0.1, 0.001] {
            let sub = fixtures::bound("golden-mean", &[("eps", eps)]).unwrap();
            let caps = Caps::default();
            let two = legal_words(&sub, 2, &caps).unwrap();
            assert_eq!(strings(&sub, &two), vec!["aa", "ab", "ba", "bb"]);
            let three = strings(&sub, &legal_words(&sub, 3, &caps).unwrap());
            assert!(three.contains(&"abb".to_string()) && three.contains(&"bbb".to_string()));
        }
    }

    #[test]
    fn unperturbed_golden_mean_is_not_primitive() {
        let sub = fixtures::bound("golden-mean", &[]).unwrap();
        let al = sub.alphabet().clone();
        let rules = vec![sub.rule(0).to_vec(), vec![(al.parse_word("b").unwrap(), 1.0)]];
        let limit = BoundSubstitution::new(al, rules).unwrap();
        assert_eq!(legal_words(&limit, 2, &Caps::default()), Err(Error::NotPrimitive));
    }

    #[test]
    fn non_primitive_is_rejected() {
        let al = crate::Alphabet::new(['a', 'b']).unwrap();
        let sub = BoundSubstitution::new(
            al.clone(),
            vec![vec![(al.parse_word("ab").unwrap(), 1.0)], vec![(al.parse_word("b").unwrap(), 1.0)]],
        )
        .unwrap();
        assert_eq!(legal_words(&sub, 2, &Caps::default()), Err(Error::NotPrimitive));
    }

    #[test]
    fn deterministic_growth_is_linear() {
        // Sturmian: exactly n + 1 words of length n
        let sub = fixtures::fibonacci();
        let rows = language_growth(&sub, 12, &Caps::default()).unwrap();
        for row in rows {
            assert_eq!(row.count, row.n + 1);
        }
    }

    #[test]
    fn language_cap() {
        let sub = fixtures::bound("dyck", &[]).unwrap();
        let caps = Caps {
            language: 10,
            ..Caps::default()
        };
        assert!(matches!(language(&sub, 4, &caps), Err(Error::SizeLimitExceeded { .. })));
    }
}
