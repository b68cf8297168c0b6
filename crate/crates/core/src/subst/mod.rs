//! Alphabets, words and random substitutions.
//!
//! A [`RandomSubstitution`] carries its probabilities as unevaluated
//! expressions; binding the parameters through
//! [`RandomSubstitution::validate`] yields a [`BoundSubstitution`], which is
//! what every analysis in this crate consumes.

mod expr;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Deref};

use serde::Serialize;

pub use expr::{BinOp, ProbExpr};

use crate::error::{Error, Result};
use crate::inflate::Inflator;
use crate::Caps;

/// Tolerance on the sum of each rule's probabilities.
pub const RULE_SUM_TOLERANCE: f64 = 1e-9;

/// Letters are stored as indices into the alphabet.
pub type Letter = u8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Alphabet {
    letters: Vec<char>,
}

impl Alphabet {
    pub fn new(letters: impl IntoIterator<Item = char>) -> Result<Self> {
        let letters: Vec<char> = letters.into_iter().collect();
        if letters.is_empty() {
            return Err(Error::InvalidAlphabet("alphabet is empty".into()));
        }
        if letters.len() > Letter::MAX as usize + 1 {
            return Err(Error::InvalidAlphabet(format!(
                "{} letters exceeds the supported maximum",
                letters.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for &c in &letters {
            if c.is_whitespace() || c == '"' || c == '#' {
                return Err(Error::InvalidAlphabet(format!("'{c}' cannot be a letter")));
            }
            if !seen.insert(c) {
                return Err(Error::InvalidAlphabet(format!("letter '{c}' repeated")));
            }
        }
        Ok(Self { letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn symbol(&self, letter: Letter) -> char {
        self.letters[letter as usize]
    }

    pub fn symbols(&self) -> &[char] {
        &self.letters
    }

    pub fn index_of(&self, symbol: char) -> Option<Letter> {
        self.letters
            .iter()
            .position(|&c| c == symbol)
            .map(|i| i as Letter)
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.letters.len()).map(|i| i as Letter)
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let symbols = text
            .chars()
            .map(|c| {
                self.index_of(c)
                    .ok_or_else(|| Error::InvalidWord(format!("'{c}' is not in the alphabet")))
            })
            .collect::<Result<Vec<_>>>()?;
        Word::new(symbols)
    }

    pub fn render(&self, word: &[Letter]) -> String {
        word.iter().map(|&l| self.symbol(l)).collect()
    }
}

/// A non-empty word over an alphabet, stored as letter indices.
///
/// The derived ordering is lexicographic by letter index with proper
/// prefixes first, which is the canonical order used for every map and
/// listing in the crate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(symbols: Vec<Letter>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidWord("words must be non-empty".into()));
        }
        Ok(Self(symbols))
    }

    pub fn letter(letter: Letter) -> Self {
        Self(vec![letter])
    }

    /// Internal constructor; callers guarantee non-emptiness.
    pub(crate) fn from_vec(symbols: Vec<Letter>) -> Self {
        debug_assert!(!symbols.is_empty());
        Self(symbols)
    }

    /// Identity of concatenation; only used inside products.
    pub(crate) fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn as_slice(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Letter> {
        self.0
    }

    /// Number of (possibly overlapping) occurrences of `pattern`.
    pub fn count_subword(&self, pattern: &[Letter]) -> usize {
        if pattern.is_empty() || pattern.len() > self.0.len() {
            return 0;
        }
        self.0.windows(pattern.len()).filter(|w| *w == pattern).count()
    }

    pub fn contains_subword(&self, pattern: &[Letter]) -> bool {
        self.count_subword(pattern) > 0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut out = self.0.clone();
        out.extend_from_slice(&other.0);
        Word(out)
    }
}

impl Deref for Word {
    type Target = [Letter];
    fn deref(&self) -> &[Letter] {
        &self.0
    }
}

/// Letter-count vector Φ(u).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AbelianVector(pub Vec<usize>);

impl Add for AbelianVector {
    type Output = AbelianVector;
    fn add(self, rhs: AbelianVector) -> AbelianVector {
        AbelianVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

pub fn abelianise(alphabet_size: usize, word: &[Letter]) -> AbelianVector {
    let mut counts = vec![0; alphabet_size];
    for &l in word {
        counts[l as usize] += 1;
    }
    AbelianVector(counts)
}

/// One realisation choice per letter: a deterministic substitution ϱ with
/// ϱ(a) ∈ ϑ(a).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marginal {
    pub choice: Vec<usize>,
}

/// Lazy odometer over all marginals, last letter varying fastest.
#[derive(Debug, Clone)]
pub struct Marginals {
    sizes: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for Marginals {
    type Item = Marginal;

    fn next(&mut self) -> Option<Marginal> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        let mut advanced = false;
        while i > 0 {
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.sizes[i] {
                advanced = true;
                break;
            }
            succ[i] = 0;
        }
        if advanced {
            self.next = Some(succ);
        }
        Some(Marginal { choice: current })
    }
}

/// Set-valued substitution with unevaluated probability expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSubstitution {
    alphabet: Alphabet,
    rules: Vec<Vec<(Word, ProbExpr)>>,
    defaults: BTreeMap<String, f64>,
}

impl RandomSubstitution {
    pub fn new(
        alphabet: Alphabet,
        rules: Vec<Vec<(Word, ProbExpr)>>,
        defaults: BTreeMap<String, f64>,
    ) -> Result<Self> {
        if rules.len() != alphabet.len() {
            return Err(Error::InvalidAlphabet(format!(
                "{} rules for {} letters",
                rules.len(),
                alphabet.len()
            )));
        }
        for (i, rule) in rules.iter().enumerate() {
            let name = alphabet.symbol(i as Letter).to_string();
            if rule.is_empty() {
                return Err(Error::EmptyRule { letter: name });
            }
            let mut seen = BTreeSet::new();
            for (word, _) in rule {
                if word.iter().any(|&l| l as usize >= alphabet.len()) {
                    return Err(Error::InvalidWord(format!(
                        "realisation of '{name}' uses a letter outside the alphabet"
                    )));
                }
                if !seen.insert(word.clone()) {
                    return Err(Error::DuplicateRealisation {
                        letter: name,
                        word: alphabet.render(word),
                    });
                }
            }
        }
        Ok(Self {
            alphabet,
            rules,
            defaults,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn rules(&self) -> &[Vec<(Word, ProbExpr)>] {
        &self.rules
    }

    pub fn defaults(&self) -> &BTreeMap<String, f64> {
        &self.defaults
    }

    /// Declared parameters together with every identifier used in a rule.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.defaults.keys().cloned().collect();
        for rule in &self.rules {
            for (_, expr) in rule {
                out.extend(expr.params());
            }
        }
        out
    }

    /// Declared defaults overridden by `overrides`.
    pub fn binding_with(&self, overrides: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
        let mut binding = self.defaults.clone();
        binding.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
        binding
    }

    pub fn marginals(&self) -> Marginals {
        Marginals {
            sizes: self.rules.iter().map(Vec::len).collect(),
            next: Some(vec![0; self.rules.len()]),
        }
    }

    /// Π r_i, or `None` on overflow.
    pub fn marginal_count(&self) -> Option<u128> {
        self.rules
            .iter()
            .try_fold(1u128, |acc, r| acc.checked_mul(r.len() as u128))
    }

    pub fn collect_marginals(&self, cap: usize) -> Result<Vec<Marginal>> {
        match self.marginal_count() {
            Some(n) if n <= cap as u128 => Ok(self.marginals().collect()),
            n => Err(Error::size(
                "marginals",
                n.map(|n| n.min(usize::MAX as u128) as usize).unwrap_or(usize::MAX),
                cap,
            )),
        }
    }

    pub fn validate(&self, binding: &BTreeMap<String, f64>) -> Result<BoundSubstitution> {
        let known = self.params();
        if let Some(name) = binding.keys().find(|k| !known.contains(*k)) {
            return Err(Error::UnknownParameter(name.clone()));
        }
        let rules = self
            .rules
            .iter()
            .map(|rule| {
                rule.iter()
                    .map(|(w, e)| Ok((w.clone(), e.eval(binding)?)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        BoundSubstitution::new(self.alphabet.clone(), rules)
    }

    /// Validates with the declared defaults.
    pub fn bind_defaults(&self) -> Result<BoundSubstitution> {
        self.validate(&self.defaults)
    }
}

/// A random substitution with all probabilities resolved and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSubstitution {
    alphabet: Alphabet,
    rules: Vec<Vec<(Word, f64)>>,
}

impl BoundSubstitution {
    pub fn new(alphabet: Alphabet, rules: Vec<Vec<(Word, f64)>>) -> Result<Self> {
        if rules.len() != alphabet.len() {
            return Err(Error::InvalidAlphabet(format!(
                "{} rules for {} letters",
                rules.len(),
                alphabet.len()
            )));
        }
        for (i, rule) in rules.iter().enumerate() {
            let name = alphabet.symbol(i as Letter).to_string();
            if rule.is_empty() {
                return Err(Error::EmptyRule { letter: name });
            }
            let mut seen = BTreeSet::new();
            let mut total = 0.0;
            for (word, p) in rule {
                if word.iter().any(|&l| l as usize >= alphabet.len()) {
                    return Err(Error::InvalidWord(format!(
                        "realisation of '{name}' uses a letter outside the alphabet"
                    )));
                }
                if !seen.insert(word.clone()) {
                    return Err(Error::DuplicateRealisation {
                        letter: name,
                        word: alphabet.render(word),
                    });
                }
                if *p <= 0.0 || !p.is_finite() {
                    return Err(Error::DegenerateProbabilities {
                        letter: name,
                        detail: format!("probability {p} of '{}' is not positive", alphabet.render(word)),
                    });
                }
                total += p;
            }
            if (total - 1.0).abs() > RULE_SUM_TOLERANCE {
                return Err(Error::DegenerateProbabilities {
                    letter: name,
                    detail: format!("probabilities sum to {total}"),
                });
            }
        }
        Ok(Self { alphabet, rules })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn rules(&self) -> &[Vec<(Word, f64)>] {
        &self.rules
    }

    pub fn rule(&self, letter: Letter) -> &[(Word, f64)] {
        &self.rules[letter as usize]
    }

    /// ϑ(a) in canonical order.
    pub fn support(&self, letter: Letter) -> Vec<&Word> {
        let mut out: Vec<&Word> = self.rule(letter).iter().map(|(w, _)| w).collect();
        out.sort();
        out
    }

    pub fn realisation_counts(&self) -> Vec<usize> {
        self.rules.iter().map(Vec::len).collect()
    }

    pub fn is_deterministic(&self) -> bool {
        self.rules.iter().all(|r| r.len() == 1)
    }

    /// Largest realisation length |ϑ|.
    pub fn max_len(&self) -> usize {
        self.rules
            .iter()
            .flat_map(|r| r.iter().map(|(w, _)| w.len()))
            .max()
            .unwrap_or(1)
    }

    pub fn min_len(&self) -> usize {
        self.rules
            .iter()
            .flat_map(|r| r.iter().map(|(w, _)| w.len()))
            .min()
            .unwrap_or(1)
    }

    /// |ϑ(a)| when all realisations of `letter` share a length.
    pub fn image_len(&self, letter: Letter) -> Option<usize> {
        let rule = self.rule(letter);
        let len = rule[0].0.len();
        rule.iter().all(|(w, _)| w.len() == len).then_some(len)
    }

    pub fn is_uniform(&self) -> bool {
        self.rules.iter().all(|rule| {
            let target = 1.0 / rule.len() as f64;
            rule.iter().all(|(_, p)| (p - target).abs() <= 1e-12)
        })
    }

    /// Same realisation sets with uniform probabilities.
    pub fn uniform(&self) -> BoundSubstitution {
        let rules = self
            .rules
            .iter()
            .map(|rule| {
                let p = 1.0 / rule.len() as f64;
                rule.iter().map(|(w, _)| (w.clone(), p)).collect()
            })
            .collect();
        BoundSubstitution {
            alphabet: self.alphabet.clone(),
            rules,
        }
    }

    pub fn marginals(&self) -> Marginals {
        Marginals {
            sizes: self.realisation_counts(),
            next: Some(vec![0; self.rules.len()]),
        }
    }

    /// The same substitution with realisations listed in canonical order.
    pub fn canonical(&self) -> BoundSubstitution {
        let rules = self
            .rules
            .iter()
            .map(|rule| {
                let mut rule = rule.clone();
                rule.sort_by(|a, b| a.0.cmp(&b.0));
                rule
            })
            .collect();
        BoundSubstitution {
            alphabet: self.alphabet.clone(),
            rules,
        }
    }

    /// ϑ_P^n as a random substitution whose rules are the laws of ϑ_P^n(a).
    pub fn power(&self, n: usize, caps: &Caps) -> Result<BoundSubstitution> {
        if n == 0 {
            return Err(Error::Domain {
                function: "power_substitution",
                value: 0.0,
            });
        }
        let inflator = Inflator::new(self, caps.clone());
        let rules = self
            .alphabet
            .letters()
            .map(|a| {
                let dist = inflator.letter(a, n)?;
                Ok(dist.iter().map(|(w, p)| (w.clone(), p)).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundSubstitution {
            alphabet: self.alphabet.clone(),
            rules,
        })
    }

    /// Renders as a spec whose probabilities are numeric literals.
    pub fn to_random(&self) -> RandomSubstitution {
        RandomSubstitution {
            alphabet: self.alphabet.clone(),
            rules: self
                .rules
                .iter()
                .map(|r| r.iter().map(|(w, p)| (w.clone(), ProbExpr::num(*p))).collect())
                .collect(),
            defaults: BTreeMap::new(),
        }
    }
}

impl fmt::Display for BoundSubstitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, rule) in self.rules.iter().enumerate() {
            write!(f, "{} -> ", self.alphabet.symbol(i as Letter))?;
            for (j, (w, p)) in rule.iter().enumerate() {
                if j > 0 {
                    f.write_str(" | ")?;
                }
                write!(f, "{}:{p}", self.alphabet.render(w))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
