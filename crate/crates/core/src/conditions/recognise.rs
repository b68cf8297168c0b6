//! Bounded-radius recognisability.
//!
//! Every position of a sequence in the subshift lies inside the image of
//! some letter y_p of a legal word y. Taking y of length 2p + 1 with
//! p = ⌈r_max / ℓ_min⌉, the images of the p letters on either side cover a
//! radius-r_max window around every position in the image of y_p. Recording
//! (window, decoration) for each such position therefore lists every legal
//! window, where the decoration says whether an inflation word of type y_p
//! starts there. The smallest radius at which equal windows always carry
//! equal decorations is the reported κ.

use std::collections::HashMap;

use super::checks::check_dsc;
use super::{CheckConfig, ConditionCheck, Finding, Recognisability};
use crate::error::{Error, Result};
use crate::lang::language;
use crate::subst::{BoundSubstitution, Letter};
use crate::Caps;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Decoration {
    Start(Letter),
    Inside,
}

pub fn check_recognisable(sub: &BoundSubstitution, r_max: usize, caps: &Caps) -> Result<Recognisability> {
    for a in sub.alphabet().letters() {
        if sub.image_len(a).is_none() {
            return Err(Error::LengthNotWellDefined {
                letter: sub.alphabet().symbol(a).to_string(),
            });
        }
    }
    if check_dsc(sub, 1, caps)?.refuted_at() == Some(1) {
        return Ok(Recognisability::RefutedViaDsc);
    }
    let min_len = sub.min_len();
    let p = r_max.div_ceil(min_len);
    let n = 2 * p + 1;
    let lang = language(sub, n, caps)?;
    let width = 2 * r_max + 1;

    let mut windows: HashMap<Vec<Letter>, Option<Decoration>> = HashMap::new();
    let mut examined = 0usize;
    for y in &lang.slice(n).words {
        let rules: Vec<_> = y.iter().map(|&a| sub.rule(a)).collect();
        let start: usize = y[..p].iter().map(|&a| sub.image_len(a).unwrap()).sum();
        let centre_len = sub.image_len(y[p]).unwrap();
        let mut choice = vec![0usize; n];
        let mut z = Vec::new();
        'tuples: loop {
            z.clear();
            for (rule, &c) in rules.iter().zip(&choice) {
                z.extend_from_slice(&rule[c].0);
            }
            examined += centre_len;
            if examined > caps.tuples {
                return Err(Error::size("recognisability windows", examined, caps.tuples));
            }
            for offset in 0..centre_len {
                let i = start + offset;
                let window = &z[i - r_max..i - r_max + width];
                let dec = if offset == 0 {
                    Decoration::Start(y[p])
                } else {
                    Decoration::Inside
                };
                match windows.get_mut(window) {
                    Some(d) if *d != Some(dec) => *d = None,
                    Some(_) => {}
                    None => {
                        windows.insert(window.to_vec(), Some(dec));
                    }
                }
            }
            let mut i = n;
            loop {
                if i == 0 {
                    break 'tuples;
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

    for r in 1..=r_max {
        let lo = r_max - r;
        let mut projected: HashMap<&[Letter], Option<Decoration>> = HashMap::new();
        let mut conflict = false;
        for (w, dec) in &windows {
            let Some(dec) = dec else {
                conflict = true;
                break;
            };
            let key = &w[lo..lo + 2 * r + 1];
            match projected.get(key) {
                Some(Some(prev)) if prev != dec => {
                    conflict = true;
                    break;
                }
                Some(_) => {}
                None => {
                    projected.insert(key, Some(*dec));
                }
            }
        }
        if !conflict {
            return Ok(Recognisability::Found { kappa: r });
        }
    }
    Ok(Recognisability::InconclusiveUpTo { r_max })
}

pub(super) struct Recognisable;

impl ConditionCheck for Recognisable {
    fn name(&self) -> &'static str {
        "recognisable"
    }
    fn description(&self) -> &'static str {
        "a bounded window fixes the inflation-word decomposition"
    }
    fn run(&self, sub: &BoundSubstitution, cfg: &CheckConfig) -> Result<Finding> {
        match check_recognisable(sub, cfg.r_max, &cfg.caps) {
            Err(Error::LengthNotWellDefined { .. }) => {
                Ok(Finding::Recognisable(Recognisability::LengthsNotWellDefined))
            }
            other => other.map(Finding::Recognisable),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn parse(text: &str) -> BoundSubstitution {
        crate::specfile::parse_spec(text).unwrap().bind_defaults().unwrap()
    }

    #[test]
    fn marker_substitution_is_recognisable() {
        let sub = parse(
            "alphabet: a b\nrule a -> \"aab\" : 1/2 | \"abb\" : 1/2\nrule b -> \"aba\" : 1/2 | \"bba\" : 1/2\n",
        );
        assert_eq!(check_recognisable(&sub, 8, &Caps::default()).unwrap(), Recognisability::Found { kappa: 5 });
        assert_eq!(
            check_recognisable(&sub, 4, &Caps::default()).unwrap(),
            Recognisability::InconclusiveUpTo { r_max: 4 }
        );
    }

    #[test]
    fn unbounded_runs_defeat_recognisability() {
        // aaa ∈ ϑ(a) makes every a^n legal, and a long run of a hides the cut phase
        let sub = fixtures::bound("example-5.1", &[]).unwrap();
        assert_eq!(
            check_recognisable(&sub, 12, &Caps::default()).unwrap(),
            Recognisability::InconclusiveUpTo { r_max: 12 }
        );
        let lang = language(&sub, 25, &Caps::default()).unwrap();
        assert!(lang.contains(&[0; 25]));
    }

    #[test]
    fn radius_of_square_is_bounded_by_recursion() {
        let sub = parse("alphabet: a b\nrule a -> \"ab\" : 1\nrule b -> \"ba\" : 1\n");
        let caps = Caps::default();
        let Recognisability::Found { kappa } = check_recognisable(&sub, 8, &caps).unwrap() else {
            panic!("Thue-Morse is recognisable");
        };
        let square = sub.power(2, &caps).unwrap();
        let bound = 2 * kappa + kappa;
        match check_recognisable(&square, bound, &caps).unwrap() {
            Recognisability::Found { kappa: k2 } => assert!(k2 <= bound),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn period_doubling_is_inconclusive() {
        let sub = fixtures::bound("period-doubling", &[]).unwrap();
        assert_eq!(
            check_recognisable(&sub, 12, &Caps::default()).unwrap(),
            Recognisability::InconclusiveUpTo { r_max: 12 }
        );
    }

    #[test]
    fn sofic_example_fails_disjointness() {
        let sub = fixtures::bound("example-5.6", &[]).unwrap();
        assert_eq!(check_recognisable(&sub, 12, &Caps::default()).unwrap(), Recognisability::RefutedViaDsc);
    }

    #[test]
    fn variable_lengths_are_rejected() {
        let sub = fixtures::bound("example-2.9", &[]).unwrap();
        assert!(matches!(
            check_recognisable(&sub, 4, &Caps::default()),
            Err(Error::LengthNotWellDefined { .. })
        ));
    }

    #[test]
    fn deterministic_fibonacci_is_recognisable() {
        // a -> ab, b -> a: every b is preceded by the a that starts its block
        match check_recognisable(&fixtures::fibonacci(), 6, &Caps::default()).unwrap() {
            Recognisability::Found { kappa } => assert!(kappa <= 2),
            other => panic!("{other:?}"),
        }
    }
}
