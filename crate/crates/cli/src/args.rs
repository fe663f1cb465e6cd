use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ssri", version, about = "Randomization inference for shift-share designs")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the result to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Worker threads (default: all available cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Randomization test of H0: beta = b.
    Test(TestCmd),
    /// Confidence set by inverting the test over a grid of null values.
    Ci(CiCmd),
    /// Asymptotic diagnostics for the design.
    Diagnose(DiagnoseCmd),
    /// Monte Carlo size or power experiment from a config file.
    Simulate(SimulateCmd),
    /// Exact test over the full sign-change or permutation group.
    Enumerate(EnumerateCmd),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV with columns unit,Y[,X].
    #[arg(long)]
    pub outcomes: PathBuf,

    /// CSV of exposure weights, wide (unit,s1..sJ) or long (unit,sector,weight).
    #[arg(long)]
    pub exposures: PathBuf,

    /// CSV with columns sector,g[,cluster].
    #[arg(long)]
    pub shocks: PathBuf,

    /// Treat the design as reduced form even when an X column is present.
    #[arg(long)]
    pub reduced_form: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatArg {
    T0,
    T1,
    T2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SidednessArg {
    TwoSided,
    Right,
    Left,
    EqualTail,
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// Null value of the coefficient.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub b: f64,

    #[arg(long, value_enum, default_value_t = StatArg::T1)]
    pub stat: StatArg,

    /// normal[:sigma], bootstrap, sign-change[:m], cluster-sign-change[:m] or permutation.
    #[arg(long, default_value = "sign-change")]
    pub scheme: String,

    /// Number of simulation draws.
    #[arg(long = "L", default_value_t = 999, value_parser = clap::value_parser!(u64).range(1..))]
    pub draws: u64,

    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    #[arg(long, value_enum, default_value_t = SidednessArg::TwoSided)]
    pub sidedness: SidednessArg,

    #[arg(long, env = "SHIFTSHARE_RI_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Demean observed and simulated shocks.
    #[arg(long)]
    pub demean: bool,

    /// Studentize with shock-cluster sums (needs a cluster column).
    #[arg(long)]
    pub cluster_robust: bool,
}

#[derive(Debug, Args)]
pub struct TestCmd {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub spec: SpecArgs,

    /// Lower end of a confidence interval for the symmetry point; enables
    /// the Berger-Boos correction.
    #[arg(long, requires = "bb_upper", allow_negative_numbers = true)]
    pub bb_lower: Option<f64>,

    #[arg(long, requires = "bb_lower", allow_negative_numbers = true)]
    pub bb_upper: Option<f64>,

    /// Confidence level of the symmetry-point interval.
    #[arg(long, default_value_t = 0.99)]
    pub bb_confidence: f64,

    /// Number of grid points over the symmetry-point interval.
    #[arg(long, default_value_t = 21)]
    pub bb_grid: usize,

    /// Enumerate the sign-change group at each grid point instead of sampling.
    #[arg(long)]
    pub bb_exact: bool,

    /// Include the simulated statistics in the output.
    #[arg(long)]
    pub emit_draws: bool,
}

#[derive(Debug, Args)]
pub struct CiCmd {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub spec: SpecArgs,

    #[arg(long, allow_negative_numbers = true, requires = "b_max", conflicts_with = "b_grid")]
    pub b_min: Option<f64>,

    #[arg(long, allow_negative_numbers = true, requires = "b_min")]
    pub b_max: Option<f64>,

    /// Number of equally spaced grid points between --b-min and --b-max.
    #[arg(long, default_value_t = 101)]
    pub b_steps: usize,

    /// Explicit comma-separated grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub b_grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct DiagnoseCmd {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub spec: SpecArgs,

    /// Draws for simulated moments and strong-shock conditions.
    #[arg(long, default_value_t = 10_000)]
    pub moment_draws: usize,
}

#[derive(Debug, Args)]
pub struct SimulateCmd {
    /// Experiment file with key = value lines.
    #[arg(long)]
    pub config: PathBuf,

    /// Overrides the seed in the config file.
    #[arg(long, env = "SHIFTSHARE_RI_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EnumerateCmd {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub spec: SpecArgs,

    #[arg(long)]
    pub emit_draws: bool,
}
