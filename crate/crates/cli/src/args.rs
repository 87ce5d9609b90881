use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use matfdp_core::noodle::FactorEstimator;
use matfdp_core::trimreg::TrimSpec;
use matfdp_simlab::Method;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "matfdp", version, about = "FDP estimation for two-sample tests on matrix-valued data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo comparison of FDP estimates against the realized FDP.
    Simulate(SimulateArgs),
    /// FDP estimates for a dataset directory.
    Analyze(AnalyzeArgs),
    /// Write one simulated round as a dataset directory.
    GenSynthetic(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Ls,
    Trimmed,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    /// Realized-factor estimator for noodle and sandwich.
    #[arg(long, value_enum, default_value_t = EstimatorArg::Trimmed)]
    pub estimator: EstimatorArg,
    /// Fraction of entries kept by the trimmed estimator.
    #[arg(long, default_value_t = 0.9)]
    pub trim_fraction: f64,
}

impl EstimatorArgs {
    pub fn resolve(&self) -> Result<FactorEstimator, CliError> {
        let spec = TrimSpec::new(self.trim_fraction).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(match self.estimator {
            EstimatorArg::Ls => FactorEstimator::LeastSquares,
            EstimatorArg::Trimmed => FactorEstimator::TrimmedL1(spec),
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub model: u8,
    /// Model 1 and 2: a or b. Model 3: f22, f24, f33 or f44 followed by
    /// -exp or -t6.
    #[arg(long)]
    pub setting: String,
    #[arg(long, default_value_t = 100)]
    pub p: usize,
    #[arg(long, default_value_t = 100)]
    pub q: usize,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    /// Rows of the shifted block [default: 8, clipped to p]
    #[arg(long)]
    pub signal_rows: Option<usize>,
    /// Columns of the shifted block [default: 25, clipped to q]
    #[arg(long)]
    pub signal_cols: Option<usize>,
    /// Mean shift inside the block [default: 1]
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.001)]
    pub t: f64,
    #[arg(long, default_value_t = 500)]
    pub rounds: usize,
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "noodle,sandwich,pfa")]
    pub methods: Vec<Method>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeMethod {
    Noodle,
    Sandwich,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Dataset directory holding manifest.json.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = AnalyzeMethod::Sandwich)]
    pub method: AnalyzeMethod,
    /// Fixed threshold; writes the selected-signal mask.
    #[arg(long, conflicts_with = "sweep")]
    pub threshold: Option<f64>,
    /// Threshold sweep over every `step`-th ordered p-value (default mode).
    #[arg(long, num_args = 0..=1, default_missing_value = "25")]
    pub sweep: Option<usize>,
    /// Override the data-driven factor count (noodle).
    #[arg(long)]
    pub h: Option<usize>,
    /// Override the data-driven row-factor count (sandwich).
    #[arg(long)]
    pub k1: Option<usize>,
    /// Override the data-driven column-factor count (sandwich).
    #[arg(long)]
    pub k2: Option<usize>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: matfdp_simlab::SimError| e.to_string())
}
