use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "autolog",
    version,
    about = "Sparse autologistic models for dynamic directed networks"
)]
pub struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,

    /// JSON file with default settings; command-line flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a synthetic series with known coefficients.
    Simulate(SimulateArgs),
    /// Fit a lambda path, select by BIC and summarise effects.
    Fit(FitArgs),
    /// Predict the slice after the last one from saved coefficients.
    Predict(PredictArgs),
    /// Rolling one-step-ahead evaluation over held-out slices.
    Evaluate(EvaluateArgs),
    /// Recompute the effect table from a series and saved coefficients.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "t")]
    pub slices: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub groups: Option<usize>,
    /// Also write dense per-slice CSVs under `dense/`.
    #[arg(long)]
    pub dense: bool,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Edge list CSV with header `t,i,j` (one-based), or a directory of
    /// dense `slice_NNNN.csv` files.
    #[arg(long)]
    pub input: PathBuf,
    /// Node ids in the edge list are labels rather than integers.
    #[arg(long)]
    pub labeled: bool,
    /// Number of nodes when it exceeds the largest id seen.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Number of slices when it exceeds the largest slice seen.
    #[arg(long)]
    pub slices: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SolverArgs {
    /// Sweep limit per pair fit.
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    /// Relative objective gain below which a fit may stop.
    #[arg(long)]
    pub objective_tolerance: Option<f64>,
    /// Bound on the magnitude of every coefficient.
    #[arg(long)]
    pub coefficient_cap: Option<f64>,
    /// KKT violation accepted at convergence, per observation.
    #[arg(long)]
    pub kkt_tolerance: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GridArgs {
    /// Single penalty; overrides any grid.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Comma-separated penalties.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Smallest penalty of a log-spaced grid.
    #[arg(long)]
    pub grid_min: Option<f64>,
    /// Largest penalty of a log-spaced grid.
    #[arg(long)]
    pub grid_max: Option<f64>,
    /// Number of log-spaced penalties.
    #[arg(long)]
    pub grid_count: Option<usize>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Coefficient JSON written by `fit`.
    #[arg(long)]
    pub coefficients: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of held-out slices.
    #[arg(long)]
    pub holdout: Option<usize>,
    /// Ground-truth JSON from `simulate`, scored alongside the fits.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub coefficients: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}
