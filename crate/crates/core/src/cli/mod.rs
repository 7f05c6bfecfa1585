//! Command-line front end.
//!
//! Subcommands `simulate`, `estimate`, `mc` and `failure-demo` each resolve a
//! [`RunConfig`], write their tables into the output directory, and leave a
//! `resolved_config.toml` snapshot next to them.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 I/O error,
//! 3 numeric failure.

mod config;
mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::Value;

pub use config::{parse_scalar, OutputFormat, RunConfig, ENV_PREFIX, SCHEMA_VERSION};
pub use output::read_path_csv;

use crate::error::{Error, Result};
use crate::estimators::{estimate, VarianceReport};
use crate::harness::{run_consistency, run_failure_demo};
use crate::simulate::simulate_path;
use output::*;

#[derive(Debug, Parser)]
#[command(name = "hfvar", version, about = "Simulate semimartingale paths and estimate the variance of power variations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one path and write `path`, `jumps` (and optionally `truth`) tables.
    Simulate(CommonArgs),
    /// Estimate on a path file (`--input`) or on a freshly simulated path.
    Estimate(CommonArgs),
    /// Monte Carlo consistency experiment.
    Mc(CommonArgs),
    /// Divergence of the baselines across a grid of sample sizes.
    FailureDemo(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML configuration file with dotted sections (model.*, est.*, mc.*, run.*).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override any setting, e.g. `--set model.lambda=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// `scaled` or `unscaled`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long)]
    pub l: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `csv` or `jsonl`.
    #[arg(long)]
    pub format: Option<String>,
    /// Path file with header `t,x` (estimate only).
    #[arg(long)]
    pub input: Option<PathBuf>,
}

impl CommonArgs {
    fn overrides(&self) -> Result<Vec<(String, Value)>> {
        let mut out = Vec::new();
        for item in &self.set {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::config(format!("--set expects KEY=VALUE, got `{item}`")))?;
            out.push((key.trim().to_string(), parse_scalar(value)));
        }
        let int = |v: u64| Value::Integer(v as i64);
        let text = |p: &Path| Value::String(p.display().to_string());
        let flags = [
            ("model.n", self.n.map(int)),
            ("est.p", self.p.map(Value::Float)),
            ("est.mode", self.mode.clone().map(Value::String)),
            ("est.k", self.k.map(int)),
            ("est.l", self.l.map(int)),
            ("run.seed", self.seed.map(int)),
            ("mc.replications", self.reps.map(int)),
            ("run.out", self.out.as_deref().map(text)),
            ("run.format", self.format.clone().map(Value::String)),
            ("run.input", self.input.as_deref().map(text)),
        ];
        out.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
        Ok(out)
    }

    fn resolve(&self, env: &[(String, String)]) -> Result<RunConfig> {
        RunConfig::resolve(self.config.as_deref(), env, &self.overrides()?)
    }
}

/// Runs the command line `args` with environment `env`, returning the files
/// written.
pub fn run<I, T>(args: I, env: &[(String, String)]) -> Result<Vec<PathBuf>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::config(e.to_string()))?;
    execute(&cli, env)
}

pub fn execute(cli: &Cli, env: &[(String, String)]) -> Result<Vec<PathBuf>> {
    let (args, action): (&CommonArgs, fn(&RunConfig, &Path, OutputFormat) -> Result<Vec<PathBuf>>) =
        match &cli.command {
            Command::Simulate(a) => (a, cmd_simulate),
            Command::Estimate(a) => (a, cmd_estimate),
            Command::Mc(a) => (a, cmd_mc),
            Command::FailureDemo(a) => (a, cmd_failure_demo),
        };
    let cfg = args.resolve(env)?;
    let format = cfg.format()?;
    let out = PathBuf::from(cfg.string("run.out")?);
    std::fs::create_dir_all(&out).map_err(|e| in_path(&out, e))?;
    let mut written = action(&cfg, &out, format)?;
    let snapshot = out.join("resolved_config.toml");
    std::fs::write(&snapshot, cfg.snapshot()).map_err(|e| in_path(&snapshot, e))?;
    written.push(snapshot);
    Ok(written)
}

fn in_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn cmd_simulate(cfg: &RunConfig, out: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let path = simulate_path(&cfg.model()?, cfg.seed()?)?;
    let mut written = vec![
        write_rows(out, "path", format, &path_rows(&path), PATH_HEADER)?,
        write_rows(out, "jumps", format, &jump_rows(&path), JUMP_HEADER)?,
    ];
    if cfg.boolean("run.truth")? {
        written.push(write_rows(out, "truth", format, &truth_rows(&path), TRUTH_HEADER)?);
    }
    Ok(written)
}

fn cmd_estimate(cfg: &RunConfig, out: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let input = cfg.string("run.input")?;
    let (observations, seed) = if input.is_empty() {
        let seed = cfg.seed()?;
        (simulate_path(&cfg.model()?, seed)?.observations, Some(seed))
    } else {
        (read_path_csv(Path::new(&input))?, None)
    };
    let n = observations.len() - 1;
    let est = cfg.estimator_config(n)?;
    for warning in est.rate_warnings(n) {
        eprintln!("warning: {warning}");
    }
    let reports = cfg
        .estimator_kinds()?
        .into_iter()
        .map(|kind| {
            let report = estimate(kind, &observations, &est)?;
            Ok(match seed {
                Some(s) => report.with_seed(s),
                None => report,
            })
        })
        .collect::<Result<Vec<VarianceReport>>>()?;
    let rows: Vec<EstimateRow> = reports.iter().map(EstimateRow::from).collect();
    Ok(vec![write_rows(out, "estimates", format, &rows, ESTIMATE_HEADER)?])
}

fn cmd_mc(cfg: &RunConfig, out: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let spec = cfg.experiment()?;
    for warning in spec.warnings() {
        eprintln!("warning: {warning}");
    }
    let report = run_consistency(&spec)?;
    let labels: Vec<String> = spec.estimators.iter().map(|e| e.label.clone()).collect();
    let mut written = Vec::new();
    if spec.outputs.summary {
        written.push(write_rows(out, "summary", format, &summary_rows(&report.summary), SUMMARY_HEADER)?);
    }
    if spec.outputs.replications {
        let rows = replication_rows(&labels, &report.records);
        written.push(write_rows(out, "replications", format, &rows, REPLICATION_HEADER)?);
    }
    if spec.outputs.standardized {
        let rows = standardized_rows(&labels, &report.records);
        written.push(write_rows(out, "standardized", format, &rows, STANDARDIZED_HEADER)?);
    }
    Ok(written)
}

fn cmd_failure_demo(cfg: &RunConfig, out: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let rows = run_failure_demo(&cfg.failure_demo()?)?;
    Ok(vec![write_rows(out, "failure", format, &rows, FAILURE_HEADER)?])
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let env: Vec<(String, String)> = std::env::vars().collect();
    match execute(&cli, &env) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
