//! Hierarchical embedded Bayesian additive regression trees.
//!
//! A sum-of-trees regression whose terminal nodes carry an overall mean and
//! per-group means, fitted by Metropolis-within-Gibbs. Setting
//! [`Mode::Bart`] drops the group layer and recovers standard BART.

pub mod config;
pub mod data;
pub mod distributions;
pub mod error;
pub mod likelihood;
pub mod model;
pub mod predict;
pub mod sampler;
pub mod simulate;
pub mod state;
pub mod tree;
pub mod tree_ops;

pub use config::{Hyperparams, Mode, MoveProbs};
pub use data::{ingest_csv, standardize, Dataset, LabelTable, ResponseTransform};
pub use distributions::RngStream;
pub use error::{Error, Result};
pub use likelihood::{node_log_marginal, NodeSuffStats};
pub use model::{fit, FittedModel};
pub use predict::{predict_row, predict_rows, rmse, Prediction};
pub use sampler::{run_bart_mode, run_chain, ChainConfig, IterationRecord, PosteriorDraws};
pub use simulate::{simulate_eq8, Truth};
pub use state::SamplerState;
pub use tree::{Node, NodeId, Tree};
