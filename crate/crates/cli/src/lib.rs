//! Command-line front end for `debayes`.
//!
//! Subcommands:
//!
//! * `analyze`: debiased credible intervals for a CSV dataset;
//! * `simulate`: the S1–S6 Monte Carlo study;
//! * `precision`: export a precision-matrix estimate;
//! * `weights`: Bayesian-bootstrap weight diagnostics.
//!
//! Exit codes are 0 on success, 1 for configuration errors, 2 for data errors
//! and 3 for numerical failures. Settings resolve as flag, then config file,
//! then built-in default; `DEBAYES_THREADS` sets the worker count when
//! `--threads` is absent.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

pub mod analyze;
pub mod config;
pub mod precision;
pub mod simulate;
pub mod weights;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<debayes::Error> for CliError {
    fn from(e: debayes::Error) -> Self {
        use debayes::Error as E;
        match e {
            E::InvalidArgument(m) => CliError::Config(m),
            E::Numerical(m) => CliError::Numerical(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "debayes", version, about = "Debiased Bayesian inference for sparse linear regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an initial posterior, debias it, and write credible intervals.
    Analyze(AnalyzeArgs),
    /// Run the Monte Carlo coverage study.
    Simulate(SimulateArgs),
    /// Estimate and export the precision matrix of the covariates.
    Precision(PrecisionArgs),
    /// Draw Bayesian-bootstrap weights and report diagnostics.
    Weights(WeightsArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat TOML or JSON file of settings (a previous run's manifest works).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for all output files.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Input CSV with a header row.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Response column, by name or zero-based index.
    #[arg(long)]
    pub response: Option<String>,
    /// Initial posterior: spike_slab_vb or horseshoe.
    #[arg(long)]
    pub prior: Option<String>,
    /// Precision estimator: nodewise, clime or direct.
    #[arg(long)]
    pub precision: Option<String>,
    /// Number of posterior draws B.
    #[arg(long)]
    pub draws: Option<usize>,
    /// Credible level.
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Center and scale covariates; intervals are reported on the original scale.
    #[arg(long)]
    pub standardize: bool,
    /// Also write the raw and debiased draw matrices.
    #[arg(long)]
    pub write_draws: bool,
    /// Nodewise penalty scale or CLIME radius scale.
    #[arg(long)]
    pub precision_scale: Option<f64>,
    /// Symmetrize the CLIME estimate.
    #[arg(long)]
    pub symmetrize: bool,
    /// Laplace slab rate.
    #[arg(long)]
    pub slab_lambda: Option<f64>,
    /// Sparsity exponent of the Beta(1, p^u) hyper-prior.
    #[arg(long)]
    pub u: Option<f64>,
    /// Noise variance for the spike-and-slab fit: a number or "lasso".
    #[arg(long)]
    pub noise_variance: Option<String>,
    /// Horseshoe burn-in iterations.
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Scale of the half-Cauchy prior on the horseshoe noise level.
    #[arg(long)]
    pub sigma_scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scenario S1 to S6.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Replications.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Posterior draws per replication.
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated subset of bayes, debiased_bayes, debiased_lasso.
    #[arg(long)]
    pub methods: Option<String>,
    /// Initial posterior: spike_slab_vb or horseshoe.
    #[arg(long)]
    pub prior: Option<String>,
    /// Comma-separated report formats: csv, json, plotdata.
    #[arg(long)]
    pub formats: Option<String>,
    /// Horseshoe burn-in iterations.
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Skip the summary table on stdout.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct PrecisionArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub response: Option<String>,
    /// nodewise, clime or direct.
    #[arg(long)]
    pub method: Option<String>,
    /// Nodewise penalty scale or CLIME radius scale.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub symmetrize: bool,
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of observations.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of weight vectors.
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the weight matrix.
    #[arg(long)]
    pub write_weights: bool,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => analyze::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Precision(a) => precision::run(a),
        Command::Weights(a) => weights::run(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub(crate) fn pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {threads} worker threads: {e}")))
}

pub(crate) fn required<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Config(format!("--{flag} is required")))
}

pub(crate) fn check_level(level: f64) -> Result<(), CliError> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("level must be in (0, 1), got {level}")))
    }
}

/// Creates the output directory once all results are in memory.
pub(crate) fn prepare_output(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create output directory {}: {e}", dir.display())))
}

pub(crate) fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

pub(crate) fn write_manifest(dir: &Path, manifest: Map<String, Value>) -> Result<(), CliError> {
    write_json(&dir.join("manifest.json"), &Value::Object(manifest))
}

pub(crate) fn absolute(path: &Path) -> PathBuf {
    std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf())
}

pub(crate) fn parse<T: std::str::FromStr<Err = debayes::Error>>(s: &str) -> Result<T, CliError> {
    s.parse::<T>().map_err(CliError::from)
}
