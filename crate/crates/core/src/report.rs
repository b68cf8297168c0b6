//! Machine-readable analysis reports and parameter sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::conditions::{check_ipp, CheckConfig, ConditionReport, IppVerdict};
use crate::entropy::{
    self, entropy_report, measure_entropy_bounds, regime_from, EntropyOptions, EntropyReport,
};
use crate::error::{Error, Result};
use crate::freq::{self, consistency_residual, word_frequencies, FrequencyTable};
use crate::mc::SampleStats;
use crate::spectral::{self, perron_data, substitution_matrix};
use crate::subst::{Alphabet, BoundSubstitution, RandomSubstitution};
use crate::Caps;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    /// Fixture name or file path the substitution came from.
    pub source: String,
    pub binding: BTreeMap<String, f64>,
    pub caps: Caps,
}

impl Provenance {
    pub fn new(source: impl Into<String>, binding: BTreeMap<String, f64>, caps: &Caps) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            source: source.into(),
            binding,
            caps: caps.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleEntry {
    pub word: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerronSection {
    pub lambda: f64,
    pub lambda_exact: Option<i64>,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
    pub right_residual: f64,
    pub left_residual: f64,
    pub power_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordEntry {
    pub word: String,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencySection {
    pub n: usize,
    pub slices: Vec<Vec<WordEntry>>,
    pub fixed_point_residual: f64,
    pub consistency_residual: f64,
    pub eigenvalue: f64,
    pub warning: Option<String>,
    pub fixed_point_tolerance: f64,
}

impl FrequencySection {
    pub fn new(alphabet: &Alphabet, table: &FrequencyTable) -> Self {
        let slices = (1..=table.n)
            .map(|len| {
                table
                    .slice(len)
                    .iter()
                    .map(|(w, f)| WordEntry {
                        word: alphabet.render(w),
                        frequency: *f,
                    })
                    .collect()
            })
            .collect();
        Self {
            n: table.n,
            slices,
            fixed_point_residual: table.fixed_point_residual,
            consistency_residual: consistency_residual(table),
            eigenvalue: table.eigenvalue,
            warning: table.warning.clone(),
            fixed_point_tolerance: freq::FIXED_POINT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub provenance: Provenance,
    pub alphabet: String,
    pub rules: BTreeMap<String, Vec<RuleEntry>>,
    pub perron: PerronSection,
    pub conditions: ConditionReport,
    pub implication_violations: Vec<&'static str>,
    pub entropy: EntropyReport,
    pub frequencies: Option<FrequencySection>,
    /// Why the frequency table is missing.
    pub frequencies_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    pub checks: CheckConfig,
    pub entropy: EntropyOptions,
    /// Longest word length in the frequency table.
    pub n: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            checks: CheckConfig::default(),
            entropy: EntropyOptions::default(),
            n: 3,
        }
    }
}

fn rule_table(sub: &BoundSubstitution) -> BTreeMap<String, Vec<RuleEntry>> {
    let al = sub.alphabet();
    al.letters()
        .map(|a| {
            let entries = sub
                .rule(a)
                .iter()
                .map(|(w, p)| RuleEntry {
                    word: al.render(w),
                    probability: *p,
                })
                .collect();
            (al.symbol(a).to_string(), entries)
        })
        .collect()
}

pub fn analyze(sub: &BoundSubstitution, provenance: Provenance, opts: &AnalyzeOptions) -> Result<Report> {
    let caps = &opts.checks.caps;
    let m = substitution_matrix(sub);
    let perron = perron_data(&m)?;
    let conditions = ConditionReport::compute(sub, &opts.checks)?;
    let entropy = entropy_report(sub, &conditions, &opts.entropy, caps)?;
    let (frequencies, frequencies_error) = match word_frequencies(sub, opts.n, caps) {
        Ok(table) => (Some(FrequencySection::new(sub.alphabet(), &table)), None),
        Err(e @ Error::SizeLimitExceeded { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(Report {
        provenance,
        alphabet: sub.alphabet().symbols().iter().collect(),
        rules: rule_table(sub),
        perron: PerronSection {
            lambda: perron.lambda,
            lambda_exact: perron.lambda_exact,
            right_residual: perron.right_residual(&m),
            left_residual: perron.left_residual(&m),
            right: perron.right,
            left: perron.left,
            power_tolerance: spectral::POWER_TOLERANCE,
        },
        implication_violations: conditions.implication_violations(),
        conditions,
        entropy,
        frequencies,
        frequencies_error,
    })
}

/// Pretty JSON with a trailing newline; stable across runs.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialise");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleEntry {
    pub word: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSection {
    pub letter: String,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub tv_distance: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    pub empirical: Vec<SampleEntry>,
}

impl SampleSection {
    pub fn new(alphabet: &Alphabet, letter: char, k: usize, stats: &SampleStats) -> Self {
        Self {
            letter: letter.to_string(),
            k,
            trials: stats.trials,
            seed: stats.seed,
            tv_distance: stats.tv_distance,
            chi_square: stats.chi_square.statistic,
            dof: stats.chi_square.dof,
            p_value: stats.chi_square.p_value,
            empirical: stats
                .empirical
                .iter()
                .map(|(w, c)| SampleEntry {
                    word: alphabet.render(w),
                    count: *c,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub param: String,
    pub from: f64,
    pub to: f64,
    /// Number of intervals; the grid has steps + 1 points.
    pub steps: usize,
    pub k_max: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub bounds: Vec<entropy::EntropyBounds>,
    pub closed_form: Option<f64>,
}

/// Entropy bounds and closed form along a one-parameter grid.
///
/// Realisation sets do not depend on the parameter while every probability
/// stays positive, so the conditions report is computed once and only the
/// production-probability verdict is re-checked per point.
pub fn sweep(
    spec: &RandomSubstitution,
    base: &BTreeMap<String, f64>,
    opts: &SweepOptions,
    checks: &CheckConfig,
) -> Result<Vec<SweepRow>> {
    if !spec.params().contains(&opts.param) {
        return Err(Error::UnknownParameter(opts.param.clone()));
    }
    if opts.steps == 0 || !(opts.from.is_finite() && opts.to.is_finite()) {
        return Err(Error::Domain {
            function: "sweep grid",
            value: opts.steps as f64,
        });
    }
    let caps = &checks.caps;
    let grid: Vec<f64> = (0..=opts.steps)
        .map(|i| opts.from + (opts.to - opts.from) * i as f64 / opts.steps as f64)
        .collect();
    let bind = |x: f64| {
        let mut b = spec.binding_with(base);
        b.insert(opts.param.clone(), x);
        spec.validate(&b)
    };
    let first = bind(grid[0])?;
    bind(grid[grid.len() - 1])?;
    let mut report = ConditionReport::compute(&first, checks)?;
    let regime = regime_from(&report);
    let isc = report.isc.verified();
    grid.iter()
        .map(|&x| {
            let sub = bind(x)?;
            if isc {
                report.ipp = match check_ipp(&sub, checks.k_max, caps) {
                    Ok(v) => v,
                    Err(Error::SizeLimitExceeded { .. }) => IppVerdict::Unresolved {
                        reason: "size limit".into(),
                    },
                    Err(e) => return Err(e),
                };
            }
            let bounds = if opts.k_max == 0 {
                Vec::new()
            } else {
                match measure_entropy_bounds(&sub, opts.k_max, regime, caps) {
                    Ok(b) => b,
                    Err(Error::SizeLimitExceeded { .. }) => {
                        let mut k = opts.k_max;
                        loop {
                            k -= 1;
                            if k == 0 {
                                break Vec::new();
                            }
                            if let Ok(b) = measure_entropy_bounds(&sub, k, regime, caps) {
                                break b;
                            }
                        }
                    }
                    Err(e) => return Err(e),
                }
            };
            let closed_form = match entropy::measure_entropy_closed(&sub, &report, caps) {
                Ok(c) => Some(c.value),
                Err(Error::HypothesesNotMet(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(SweepRow {
                param: x,
                bounds,
                closed_form,
            })
        })
        .collect()
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with header `param,lower_1..,upper_1..,closed_form`, LF line endings.
pub fn sweep_csv(param: &str, k_max: usize, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(param);
    for k in 1..=k_max {
        let _ = write!(out, ",lower_{k}");
    }
    for k in 1..=k_max {
        let _ = write!(out, ",upper_{k}");
    }
    out.push_str(",closed_form\n");
    for row in rows {
        out.push_str(&fmt17(row.param));
        for k in 1..=k_max {
            out.push(',');
            if let Some(b) = row.bounds.get(k - 1) {
                out.push_str(&fmt17(b.lower));
            }
        }
        for k in 1..=k_max {
            out.push(',');
            if let Some(b) = row.bounds.get(k - 1) {
                out.push_str(&fmt17(b.upper));
            }
        }
        out.push(',');
        if let Some(c) = row.closed_form {
            out.push_str(&fmt17(c));
        }
        out.push('\n');
    }
    out
}
