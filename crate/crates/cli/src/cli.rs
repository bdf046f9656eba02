//! Command-line syntax.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_110_630;

#[derive(Debug, Parser)]
#[command(name = "npfusion", version, about = "Decentralized Neyman-Pearson detection for Poisson sensor networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print scenario constants (T, B, J, C, D) and per-sensor source integrals.
    Scenario(ScenarioArgs),
    /// Analytic detection and false-alarm bounds, optionally swept over array size.
    Bounds(BoundsArgs),
    /// Run network trials and write one outcome row per trial.
    Simulate(SimulateArgs),
    /// Monte Carlo ROC over a grid of log thresholds.
    Roc(RocArgs),
    /// Choose a threshold for a target false-alarm probability.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Source {
    /// Built-in scenario: paper-sec6, toy-constant, toy-single, toy-inhomogeneous.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Output format; `scenario` defaults to text, other commands to csv.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write results here (plus a `.manifest` file) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[group(required = false, multiple = false)]
pub struct Threshold {
    /// Likelihood-ratio threshold γ > 0.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Threshold given as log γ.
    #[arg(long, allow_hyphen_values = true)]
    pub log_gamma: Option<f64>,
    /// Target false-alarm probability; the threshold comes from the bound.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub output: Output,
    /// Threshold at which to report count thresholds.
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub threshold: Threshold,
    /// Sensor-count range `a:b`; arrays are the first k sensors.
    #[arg(long)]
    pub sweep_k: Option<String>,
    /// Recompute B, C, D for each truncated array instead of keeping the full array's.
    #[arg(long, requires = "sweep_k")]
    pub sweep_recompute: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HypothesisArg {
    H0,
    H1,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    Channel,
    Tcp,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub threshold: Threshold,
    #[arg(long, value_enum, default_value = "both")]
    pub hypothesis: HypothesisArg,
    #[arg(long, default_value_t = 1000)]
    pub trials: u32,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Sensor ids taken out of commission, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub dropout: Vec<u32>,
    #[arg(long, value_enum, default_value = "channel")]
    pub transport: TransportArg,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct RocArgs {
    #[command(flatten)]
    pub source: Source,
    /// Log-threshold grid `start:stop:points`.
    #[arg(long, default_value = "-5:5:21", allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long, default_value_t = 1000)]
    pub trials: u32,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Mc,
    Bound,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "bound")]
    pub method: Method,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u32,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}
