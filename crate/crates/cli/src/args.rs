use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hebart_core::Mode;

use crate::settings::Overrides;

#[derive(Debug, Parser)]
#[command(name = "hebart", version, about = "Hierarchical embedded BART: fit, predict, simulate, cross-validate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one chain and write draws, model, summary and resolved config.
    Fit(FitArgs),
    /// Score a CSV with a fitted model.
    Predict(PredictArgs),
    /// Generate a grouped dataset from random single-split trees.
    Simulate(SimulateArgs),
    /// k-fold cross-validation, optionally against standard BART.
    Crossval(CrossvalArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub response: String,
    #[arg(long)]
    pub group: String,
    /// Comma-separated or repeated.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub covariates: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Hierarchical,
    Bart,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Hierarchical => Mode::Hierarchical,
            ModeArg::Bart => Mode::Bart,
        }
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// JSON file with `mode` and `hyperparams` (any subset of fields).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub k2: Option<f64>,
}

impl ModelArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            mode: self.mode.map(Mode::from),
            seed: self.seed,
            num_trees: self.trees,
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            k2: self.k2,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Group labels whose rows are all held out for testing.
    #[arg(long, value_delimiter = ',')]
    pub holdout_groups: Vec<String>,
    /// Share of the remaining rows also held out.
    #[arg(long, default_value_t = 0.0)]
    pub holdout_fraction: f64,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Directory written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Group column; without it every row gets group-free predictions.
    #[arg(long)]
    pub group: Option<String>,
    /// Response column; when given, RMSE is printed.
    #[arg(long)]
    pub response: Option<String>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Seed for fresh group-effect draws; defaults to the model's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub groups: usize,
    #[arg(long, default_value_t = 10)]
    pub trees: usize,
    #[arg(long, default_value_t = 8.0)]
    pub k1: f64,
    #[arg(long, default_value_t = 5.0)]
    pub k2: f64,
    #[arg(long, default_value_t = 0.5)]
    pub tau_shape: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Truth sidecar path; defaults to `<out>.truth`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Bart,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also write the fold table to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
