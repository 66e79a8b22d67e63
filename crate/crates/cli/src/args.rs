use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{DataKind, Fixture};

#[derive(Debug, Parser)]
#[command(name = "dta", version, about = "DTA and DA samplers and EM for heteroscedastic mixed models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Gibbs sampler or EM on a dataset or fixture.
    Fit(FitArgs),
    /// Autocorrelations and effective sample sizes of a draws file.
    Diagnose(DiagnoseArgs),
    /// Simulate a univariate heteroscedastic dataset.
    Simulate(SimulateArgs),
    /// Write a built-in fixture as CSV.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Dta,
    Da,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Gibbs,
    Em,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StopArg {
    /// Relative change of the log-likelihood.
    Loglik,
    /// Largest absolute parameter change.
    Param,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV dataset; requires --kind.
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture", requires = "kind")]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<DataKind>,
    #[arg(long, value_enum)]
    pub fixture: Option<Fixture>,
    #[arg(long, value_enum, default_value = "dta")]
    pub scheme: SchemeArg,
    #[arg(long, value_enum, default_value = "gibbs")]
    pub algo: Algo,
    /// Total Gibbs iterations including burn-in.
    #[arg(long, default_value_t = 11_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1_000)]
    pub burnin: usize,
    /// Required for Gibbs runs.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "loglik")]
    pub stop: StopArg,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    /// Beta-Binomial: per-group series order.
    #[arg(long, default_value_t = 30)]
    pub m1: usize,
    /// Beta-Binomial: prior series order.
    #[arg(long, default_value_t = 30)]
    pub m2: usize,
    /// Beta-Binomial prior exponent.
    #[arg(long, default_value_t = 3.0)]
    pub c: f64,
    /// Beta-Binomial prior shift.
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    /// Multivariate data: use V_min = 0.999 λ_min I.
    #[arg(long)]
    pub safe_mode: bool,
    /// Independent chains run concurrently, one draws file each.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Beta-Binomial: also write the exact posterior on an N x N grid of
    /// (log alpha, log beta) to grid.csv.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value = "-6", allow_hyphen_values = true)]
    pub grid_lo: f64,
    #[arg(long, default_value = "34", allow_hyphen_values = true)]
    pub grid_hi: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Draws file written by `fit`.
    #[arg(long)]
    pub draws: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub max_lag: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 5.0)]
    pub a: f64,
    #[arg(long, default_value_t = 10.0)]
    pub v_mean: f64,
    #[arg(long, default_value_t = 2.0)]
    pub v_sd: f64,
    /// Output CSV in the uni format.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, value_enum)]
    pub fixture: Fixture,
    #[arg(long)]
    pub out: PathBuf,
}
