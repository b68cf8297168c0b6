use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use randsub::conditions::{CheckConfig, CheckRegistry, ConditionReport};
use randsub::entropy::{ClosedFormRegistry, EntropyOptions, Regime};
use randsub::report::{self, AnalyzeOptions, FrequencySection, Provenance, SampleSection, SweepOptions};
use randsub::{fixtures, freq, mc, specfile, BoundSubstitution, Caps, Error, RandomSubstitution};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "randsub", version, about = "Exact analysis of random substitutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Spec file path, or the name of a bundled fixture.
    spec: String,
    /// Parameter override NAME=VALUE (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Resource caps, e.g. support=1000000,language=50000.
    #[arg(long)]
    caps: Option<String>,
}

#[derive(Args, Clone)]
struct CheckDepths {
    /// Levels for the set conditions and production probabilities.
    #[arg(long = "check-k", default_value_t = 3)]
    check_k: usize,
    /// Longest legal word for the realisation-path check.
    #[arg(long = "check-n", default_value_t = 3)]
    check_n: usize,
    /// Largest recognisability radius.
    #[arg(long = "rmax", default_value_t = 12)]
    r_max: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Full report: Perron data, conditions, entropy, frequencies.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        depths: CheckDepths,
        #[arg(long, default_value_t = 6)]
        kmax: usize,
        #[arg(long, default_value_t = 6)]
        mmax: usize,
        /// Longest word length in the frequency table.
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Force the bound regime (general or urp).
        #[arg(long)]
        regime: Option<Regime>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entropy bounds and closed form along a parameter grid, as CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        depths: CheckDepths,
        /// Parameter to vary.
        #[arg(long)]
        sweep: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        /// Number of grid intervals.
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 2)]
        kmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Word frequencies of the frequency measure.
    Freqs {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long)]
        json: bool,
    },
    /// Monte Carlo samples of an inflation word against the exact law.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Letter to inflate (defaults to the first letter).
        #[arg(long)]
        letter: Option<char>,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Run registered condition checks.
    Check {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        depths: CheckDepths,
        /// Run only this check.
        #[arg(long)]
        name: Option<String>,
    },
    /// Evaluate closed-form entropy rules.
    Closed {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        depths: CheckDepths,
        /// Evaluate only this rule.
        #[arg(long)]
        rule: Option<String>,
    },
    /// List bundled fixtures, condition checks and closed-form rules.
    List,
}

struct Loaded {
    spec: RandomSubstitution,
    source: String,
    overrides: BTreeMap<String, f64>,
    caps: Caps,
}

impl Loaded {
    fn bind(&self) -> randsub::Result<BoundSubstitution> {
        self.spec.validate(&self.spec.binding_with(&self.overrides))
    }

    fn binding(&self) -> BTreeMap<String, f64> {
        self.spec.binding_with(&self.overrides)
    }
}

fn parse_param(text: &str) -> randsub::Result<(String, f64)> {
    let bad = || Error::Parse {
        line: 1,
        column: 1,
        message: format!("expected NAME=VALUE, got '{text}'"),
    };
    let (name, value) = text.split_once('=').ok_or_else(bad)?;
    let value: f64 = value.trim().parse().map_err(|_| bad())?;
    Ok((name.trim().to_string(), value))
}

fn load(common: &Common) -> randsub::Result<Loaded> {
    let path = Path::new(&common.spec);
    let spec = if path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidAlphabet(format!("cannot read {}: {e}", path.display())))?;
        specfile::parse_spec(&text)?
    } else {
        fixtures::load(&common.spec)?
    };
    let overrides = common
        .params
        .iter()
        .map(|p| parse_param(p))
        .collect::<randsub::Result<BTreeMap<_, _>>>()?;
    let mut caps = Caps::from_env()?;
    if let Some(text) = &common.caps {
        caps.parse_overrides(text)?;
    }
    Ok(Loaded {
        spec,
        source: common.spec.clone(),
        overrides,
        caps,
    })
}

fn check_config(depths: &CheckDepths, caps: &Caps) -> CheckConfig {
    CheckConfig {
        k_max: depths.check_k,
        n_max: depths.check_n,
        r_max: depths.r_max,
        caps: caps.clone(),
    }
}

fn emit(text: &str, out: Option<&Path>) -> randsub::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::InvalidAlphabet(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct CheckLine<'a> {
    name: &'a str,
    result: serde_json::Value,
}

fn run(cli: Cli) -> randsub::Result<()> {
    match cli.command {
        Command::Analyze {
            common,
            depths,
            kmax,
            mmax,
            n,
            regime,
            out,
        } => {
            let loaded = load(&common)?;
            let sub = loaded.bind()?;
            let opts = AnalyzeOptions {
                checks: check_config(&depths, &loaded.caps),
                entropy: EntropyOptions {
                    k_max: kmax,
                    m_max: mmax,
                    regime,
                },
                n,
            };
            let prov = Provenance::new(&loaded.source, loaded.binding(), &loaded.caps);
            let rep = report::analyze(&sub, prov, &opts)?;
            emit(&report::to_json(&rep), out.as_deref())
        }
        Command::Sweep {
            common,
            depths,
            sweep,
            from,
            to,
            steps,
            kmax,
            out,
        } => {
            let loaded = load(&common)?;
            let opts = SweepOptions {
                param: sweep,
                from,
                to,
                steps,
                k_max: kmax,
            };
            let rows = report::sweep(&loaded.spec, &loaded.overrides, &opts, &check_config(&depths, &loaded.caps))?;
            emit(&report::sweep_csv(&opts.param, kmax, &rows), out.as_deref())
        }
        Command::Freqs { common, n, json } => {
            let loaded = load(&common)?;
            let sub = loaded.bind()?;
            let table = freq::word_frequencies(&sub, n, &loaded.caps)?;
            let section = FrequencySection::new(sub.alphabet(), &table);
            if json {
                return emit(&report::to_json(&section), None);
            }
            let mut text = String::new();
            for (i, slice) in section.slices.iter().enumerate() {
                text.push_str(&format!("# length {}\n", i + 1));
                for e in slice {
                    text.push_str(&format!("{}: {}\n", e.word, e.frequency));
                }
            }
            text.push_str(&format!("fixed_point_residual: {}\n", section.fixed_point_residual));
            text.push_str(&format!("consistency_residual: {}\n", section.consistency_residual));
            if let Some(w) = &section.warning {
                text.push_str(&format!("warning: {w}\n"));
            }
            emit(&text, None)
        }
        Command::Sample {
            common,
            letter,
            k,
            trials,
            seed,
            json,
        } => {
            let loaded = load(&common)?;
            let sub = loaded.bind()?;
            let al = sub.alphabet();
            let symbol = letter.unwrap_or(al.symbols()[0]);
            let a = al
                .index_of(symbol)
                .ok_or_else(|| Error::InvalidWord(format!("letter '{symbol}' is not in the alphabet")))?;
            let stats = mc::sample_inflation(&sub, a, k, trials, seed, &loaded.caps)?;
            let section = SampleSection::new(al, symbol, k, &stats);
            if json {
                return emit(&report::to_json(&section), None);
            }
            let mut text = format!(
                "letter: {}\nk: {}\ntrials: {}\nseed: {}\ntv_distance: {}\nchi_square: {} (dof {}, p = {})\n",
                section.letter, k, section.trials, section.seed, section.tv_distance, section.chi_square, section.dof, section.p_value
            );
            for e in &section.empirical {
                text.push_str(&format!("{}: {}\n", e.word, e.count));
            }
            emit(&text, None)
        }
        Command::Check { common, depths, name } => {
            let loaded = load(&common)?;
            let sub = loaded.bind()?;
            randsub::lang::ensure_primitive(&sub)?;
            let cfg = check_config(&depths, &loaded.caps);
            let registry = CheckRegistry::builtin();
            let names: Vec<&str> = match &name {
                Some(n) => vec![n.as_str()],
                None => registry.names(),
            };
            let mut lines = Vec::new();
            for n in names {
                let finding = registry.run(n, &sub, &cfg)?;
                lines.push(CheckLine {
                    name: n,
                    result: serde_json::to_value(&finding).expect("findings serialise"),
                });
            }
            emit(&report::to_json(&lines), None)
        }
        Command::Closed { common, depths, rule } => {
            let loaded = load(&common)?;
            let sub = loaded.bind()?;
            let report = ConditionReport::compute(&sub, &check_config(&depths, &loaded.caps))?;
            let registry = ClosedFormRegistry::builtin();
            if let Some(name) = rule {
                let c = registry.evaluate(&name, &sub, &report, &loaded.caps)?;
                return emit(&report::to_json(&c), None);
            }
            let mut text = String::new();
            for r in registry.iter() {
                match r.evaluate(&sub, &report, &loaded.caps) {
                    Ok(c) => text.push_str(&format!("{}: {} ({})\n", r.name(), c.value, c.qualifier)),
                    Err(Error::HypothesesNotMet(why)) => text.push_str(&format!("{}: n/a ({why})\n", r.name())),
                    Err(e) => return Err(e),
                }
            }
            emit(&text, None)
        }
        Command::List => {
            let mut text = String::from("fixtures:\n");
            for n in fixtures::names() {
                text.push_str(&format!("  {n}\n"));
            }
            text.push_str("checks:\n");
            for c in CheckRegistry::builtin().iter() {
                text.push_str(&format!("  {}: {}\n", c.name(), c.description()));
            }
            text.push_str("closed-form rules:\n");
            for r in ClosedFormRegistry::builtin().iter() {
                text.push_str(&format!("  {}: {}\n", r.name(), r.description()));
            }
            emit(&text, None)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
