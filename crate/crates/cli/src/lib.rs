//! Command-line front end: `gen`, `solve`, `benchmark` and `validate`.
//!
//! Exit codes: 0 success, 1 I/O or validation failure, 2 iteration cap
//! reached, 3 a validated property failed, 64 bad usage.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use smd_core::{GeometryKind, OracleMode, Variant};

pub mod benchmark;
pub mod gen;
pub mod output;
pub mod solve;
pub mod validate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CAP_REACHED: i32 = 2;
pub const EXIT_PROPERTY_FAILED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "smd", version, about = "Adaptive stochastic mirror descent on the simplex")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Args)]
pub struct Common {
    /// Random seed (base seed for multi-seed benchmarks).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Target accuracy.
    #[arg(long, global = true, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Worker threads for benchmarks; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Leave the timestamp out of result files.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random quadratic instance.
    Gen(GenArgs),
    /// Solve one instance and write the result and trace.
    Solve(SolveArgs),
    /// Run many seeds of several variants and oracles on one instance.
    Benchmark(BenchmarkArgs),
    /// Check the statistical and analytic properties of the method.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GeometryArg {
    Entropy,
    Euclidean,
}

impl From<GeometryArg> for GeometryKind {
    fn from(g: GeometryArg) -> Self {
        match g {
            GeometryArg::Entropy => GeometryKind::EntropySimplex,
            GeometryArg::Euclidean => GeometryKind::EuclideanSimplex,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleArg {
    #[value(alias = "deterministic")]
    Exact,
    #[value(alias = "column-sampling")]
    Column,
}

impl From<OracleArg> for OracleMode {
    fn from(o: OracleArg) -> Self {
        match o {
            OracleArg::Exact => OracleMode::Exact,
            OracleArg::Column => OracleMode::Column,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Adaptive,
    Fixed,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Adaptive => Variant::Adaptive,
            VariantArg::Fixed => Variant::Fixed,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct GenArgs {
    /// Dimension (at least 2).
    #[arg(long)]
    pub n: usize,
    /// Number of linear pieces in the constraint.
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    #[arg(long, default_value_t = 0.1)]
    pub density: f64,
    /// Slack of the stored feasible witness.
    #[arg(long, default_value_t = 0.05)]
    pub margin: f64,
    #[arg(long, value_enum, default_value_t = GeometryArg::Entropy)]
    pub geometry: GeometryArg,
    #[arg(long, value_enum, default_value_t = OracleArg::Column)]
    pub oracle: OracleArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct SolveArgs {
    /// Instance file.
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Adaptive)]
    pub variant: VariantArg,
    /// Uniform subgradient bound; required by the fixed variant.
    #[arg(long = "fixed-M")]
    pub fixed_m: Option<f64>,
    /// Override the oracle stored in the instance.
    #[arg(long, value_enum)]
    pub oracle: Option<OracleArg>,
    /// Override the automatic iteration cap of the adaptive variant.
    #[arg(long)]
    pub max_iterations: Option<u64>,
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    /// Result JSON; printed to standard output when absent.
    #[arg(long)]
    pub result_out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Seeds per configuration, numbered from `--seed` upward.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [VariantArg::Adaptive, VariantArg::Fixed])]
    pub variants: Vec<VariantArg>,
    #[arg(long = "oracles", value_enum, value_delimiter = ',', default_values_t = [OracleArg::Exact, OracleArg::Column])]
    pub oracles: Vec<OracleArg>,
    /// Bound for the fixed variant; defaults to the instance's uniform bound.
    #[arg(long = "fixed-M")]
    pub fixed_m: Option<f64>,
    /// Grid resolution for the reference optimum (instances with n <= 4).
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Summary CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Unbiasedness,
    PartialSum,
    OneStep,
    Telescoping,
}

#[derive(Clone, Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// Monte Carlo samples per point for the unbiasedness suite.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Random sequences for the partial-sum suite.
    #[arg(long, default_value_t = 10_000)]
    pub sequences: usize,
    /// Extra instance to include in the suites.
    #[arg(long)]
    pub problem: Option<PathBuf>,
}

/// Misuse of the command line that clap cannot detect on its own.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

/// Runs a parsed command and returns its exit code.
pub fn execute(cli: Cli) -> anyhow::Result<i32> {
    let common = &cli.common;
    if !(common.epsilon.is_finite() && common.epsilon > 0.0) {
        return Err(usage(format!("--epsilon must be positive, got {}", common.epsilon)));
    }
    match &cli.command {
        Command::Gen(args) => gen::run(common, args),
        Command::Solve(args) => solve::run(common, args),
        Command::Benchmark(args) => benchmark::run(common, args),
        Command::Validate(args) => validate::run(common, args),
    }
}

/// Parses `args`, runs the command and maps every failure to an exit code,
/// printing diagnostics to standard error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}
