//! `fanobound` command-line tool.
//!
//! Exit codes: 0 success, 1 runtime error or failed verification,
//! 2 invalid configuration or unknown suite, 3 the requested bound is invalid
//! for the configuration.

mod config;
mod output;
mod run;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fanobound::verify::{run_suite, Suite, SuiteOptions};

use config::{BoundConfig, RawConfig, Sweep, SEED_ENV};
use output::{render_csv, Artifacts, RunId, BOUND_SCHEMA};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
    InvalidBound(String),
    Failed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Runtime(_) | CliError::Failed => 1,
            CliError::Config(_) => 2,
            CliError::InvalidBound(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
            CliError::InvalidBound(m) => write!(f, "invalid bound: {m}"),
            CliError::Failed => write!(f, "verification failed"),
        }
    }
}

#[derive(Parser)]
#[command(name = "fanobound", version, about = "Distance-based and continuum Fano lower bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one bound and print it as JSON.
    Bound {
        /// normal-mean, normal-mean-tail, sparse-location, compressed-sensing or regression.
        problem: Option<String>,
        #[command(flatten)]
        keys: KeyArgs,
        /// Also write bound.json, bound.csv and manifest.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite and print a per-check summary.
    Verify {
        /// prop1-exhaustive, decoder-oracle, quadrature, volume, grid-partition, estimator-risk or all.
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Perturb every checked quantity so the suite must fail.
        #[arg(long)]
        inject_fault: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a bound over a sweep of one key and print CSV.
    Table {
        problem: Option<String>,
        /// `key=v1,v2,...` over d, s, n, sigma2, t, r or scale.
        #[arg(long)]
        sweep: String,
        #[command(flatten)]
        keys: KeyArgs,
        /// Add simulated risk of the reference estimator with this many replicates.
        #[arg(long)]
        risk_reps: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct KeyArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dimension.
    #[arg(long, allow_hyphen_values = true)]
    d: Option<String>,
    /// Sparsity.
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    /// Sample size.
    #[arg(long, allow_hyphen_values = true)]
    n: Option<String>,
    /// Noise variance (default 1).
    #[arg(long, allow_hyphen_values = true)]
    sigma2: Option<String>,
    /// Tail radius (normal-mean-tail).
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    /// Prior ball radius (normal-mean-tail).
    #[arg(long, allow_hyphen_values = true)]
    r: Option<String>,
    /// Comma-separated eps values for the sparse pipelines.
    #[arg(long, allow_hyphen_values = true)]
    eps_grid: Option<String>,
    /// Seed; defaults to $FANOBOUND_SEED, then 0.
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    /// simple or integrated (normal-mean).
    #[arg(long, allow_hyphen_values = true)]
    mode: Option<String>,
    /// Design scaling c for regression, X = c sqrt(n) I_d.
    #[arg(long, allow_hyphen_values = true)]
    scale: Option<String>,
}

impl KeyArgs {
    fn resolve(&self, problem: Option<&str>) -> Result<RawConfig, CliError> {
        let mut raw = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                RawConfig::parse(&text)?
            }
            None => RawConfig::default(),
        };
        let mut flags = RawConfig::default();
        let pairs = [
            ("problem", problem),
            ("d", self.d.as_deref()),
            ("s", self.s.as_deref()),
            ("n", self.n.as_deref()),
            ("sigma2", self.sigma2.as_deref()),
            ("t", self.t.as_deref()),
            ("r", self.r.as_deref()),
            ("eps-grid", self.eps_grid.as_deref()),
            ("seed", self.seed.as_deref()),
            ("mode", self.mode.as_deref()),
            ("scale", self.scale.as_deref()),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                flags.insert(k, v)?;
            }
        }
        raw.overlay(flags);
        Ok(raw)
    }
}

fn cmd_bound(problem: Option<String>, keys: &KeyArgs, out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = BoundConfig::from_raw(&keys.resolve(problem.as_deref())?)?;
    let eval = run::evaluate(&cfg)?;
    let id = RunId::new("bound", cfg.canonical(), cfg.seed);
    let doc = serde_json::json!({
        "schema": BOUND_SCHEMA,
        "manifest": id.manifest,
        "config": id.config,
        "result": eval.result,
    });
    let json = serde_json::to_string_pretty(&doc).expect("result serializes") + "\n";
    print!("{json}");
    if let Some(dir) = out {
        let mut art = Artifacts::new(&dir);
        art.add("bound.json", json);
        art.add("bound.csv", render_csv(std::slice::from_ref(&eval.row), &id.manifest));
        art.write(&id)?;
    }
    if !eval.row.valid {
        return Err(CliError::InvalidBound(format!(
            "{} is not applicable at this configuration",
            eval.row.pipeline
        )));
    }
    Ok(())
}

fn default_seed() -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("invalid value for {SEED_ENV}: `{v}`"))),
        Err(_) => Ok(0),
    }
}

fn cmd_verify(suite: &str, seed: Option<u64>, inject_fault: bool, out: Option<PathBuf>) -> Result<(), CliError> {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![suite.parse().map_err(|_| {
            let names: Vec<_> = Suite::ALL.iter().map(|s| s.as_str()).collect();
            CliError::Config(format!("unknown suite `{suite}` (expected one of {}, all)", names.join(", ")))
        })?]
    };
    let seed = match seed {
        Some(s) => s,
        None => default_seed()?,
    };
    let opts = SuiteOptions {
        seed,
        inject_fault,
        ..SuiteOptions::default()
    };
    let mut text = String::new();
    let mut pass = true;
    for s in suites {
        let report = run_suite(s, &opts)?;
        pass &= report.pass();
        text.push_str(&report.render());
    }
    print!("{text}");
    if let Some(dir) = out {
        let config = BTreeMap::from([
            ("suite".to_string(), suite.to_string()),
            ("inject-fault".to_string(), inject_fault.to_string()),
        ]);
        let id = RunId::new("verify", config, seed);
        let mut art = Artifacts::new(&dir);
        art.add(format!("verify-{suite}.txt"), format!("# manifest={}\n{text}", id.manifest));
        art.write(&id)?;
    }
    if pass {
        Ok(())
    } else {
        Err(CliError::Failed)
    }
}

fn cmd_table(
    problem: Option<String>,
    sweep: &str,
    keys: &KeyArgs,
    risk_reps: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let sweep: Sweep = sweep.parse()?;
    let mut raw = keys.resolve(problem.as_deref())?;
    // The swept key satisfies the required-key check.
    if raw.get(&sweep.key).is_none() {
        raw.insert(&sweep.key, &sweep.values[0].to_string())?;
    }
    let base = BoundConfig::from_raw(&raw)?;
    if risk_reps == Some(0) {
        return Err(CliError::Config("invalid value for key `risk-reps`: must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(sweep.values.len());
    for &v in &sweep.values {
        let mut cfg = base.clone();
        cfg.set(&sweep.key, v)?;
        let eval = run::evaluate(&cfg)?;
        let mut row = eval.row.clone();
        if !output::COLUMNS.contains(&sweep.key.as_str()) {
            row.extra = Some((sweep.key.clone(), v));
        }
        if let Some(reps) = risk_reps {
            row.risk = Some(run::matched_risk(&cfg, &eval, reps)?);
        }
        rows.push(row);
    }
    let mut config = base.canonical();
    config.remove(&sweep.key);
    config.insert("sweep".to_string(), sweep.to_string());
    if let Some(reps) = risk_reps {
        config.insert("risk-reps".to_string(), reps.to_string());
    }
    let id = RunId::new("table", config, base.seed);
    let csv = render_csv(&rows, &id.manifest);
    print!("{csv}");
    if let Some(dir) = out {
        let mut art = Artifacts::new(&dir);
        art.add("table.csv", csv);
        art.write(&id)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bound { problem, keys, out } => cmd_bound(problem, &keys, out),
        Command::Verify {
            suite,
            seed,
            inject_fault,
            out,
        } => cmd_verify(&suite, seed, inject_fault, out),
        Command::Table {
            problem,
            sweep,
            keys,
            risk_reps,
            out,
        } => cmd_table(problem, &sweep, &keys, risk_reps, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fanobound: {e}");
            ExitCode::from(e.code())
        }
    }
}
