//! Files written by `fit` and read back by `predict`.
//!
//! The model container is UTF-8 text:
//!
//! ```text
//! HEBART-MODEL
//! format 1
//! {...JSON body...}
//! ```
//!
//! The body is the serialized fitted model: hyperparameters, mode, column
//! names, group labels, response transform, every stored forest with its
//! `tau` and `k1`, and the per-iteration trace.

use std::path::Path;

use hebart_core::sampler::IterationRecord;
use hebart_core::{FittedModel, Prediction};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MODEL_MAGIC: &str = "HEBART-MODEL";
pub const MODEL_FORMAT: u32 = 1;
pub const MODEL_FILE: &str = "model.hebart";
pub const DRAWS_FILE: &str = "draws.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.resolved.json";

pub fn write_model(model: &FittedModel, path: &Path) -> CliResult<()> {
    let body = serde_json::to_string(model).expect("model serializes");
    let text = format!("{MODEL_MAGIC}\nformat {MODEL_FORMAT}\n{body}\n");
    std::fs::write(path, text).map_err(CliError::io(path))
}

pub fn read_model(path: &Path) -> CliResult<FittedModel> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let bad = |message: String| CliError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut parts = text.splitn(3, '\n');
    if parts.next() != Some(MODEL_MAGIC) {
        return Err(bad("not a model file (bad magic header)".into()));
    }
    let version = parts
        .next()
        .and_then(|l| l.strip_prefix("format "))
        .and_then(|v| v.trim().parse::<u32>().ok())
        .ok_or_else(|| bad("missing format line".into()))?;
    if version != MODEL_FORMAT {
        return Err(bad(format!("unsupported model format {version}")));
    }
    let mut model: FittedModel =
        serde_json::from_str(parts.next().unwrap_or("")).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })?;
    model.reindex();
    Ok(model)
}

/// One line of `draws.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawRow {
    pub iteration: usize,
    pub stored: bool,
    pub tau: f64,
    pub k1: f64,
    /// Number of trees whose structure move was accepted this sweep.
    pub trees_accepted: usize,
    /// Empty when no `k1` step ran.
    pub k1_accepted: Option<bool>,
}

impl From<&IterationRecord> for DrawRow {
    fn from(r: &IterationRecord) -> Self {
        Self {
            iteration: r.iteration,
            stored: r.stored,
            tau: r.tau,
            k1: r.k1,
            trees_accepted: r.tree_accepted.iter().filter(|&&a| a).count(),
            k1_accepted: r.k1_accepted,
        }
    }
}

pub fn write_draws(trace: &[IterationRecord], path: &Path) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    for r in trace {
        w.serialize(DrawRow::from(r)).map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_draws(path: &Path) -> CliResult<Vec<DrawRow>> {
    let mut r = csv::Reader::from_path(path).map_err(CliError::csv(path))?;
    r.deserialize()
        .collect::<Result<_, _>>()
        .map_err(CliError::csv(path))
}

/// One line of a predictions file; bounds and point are on the raw scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub row: usize,
    pub group: Option<String>,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn write_predictions(
    predictions: &[Prediction],
    groups: &[Option<String>],
    path: &Path,
) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(CliError::csv(path))?;
    for (i, (p, g)) in predictions.iter().zip(groups).enumerate() {
        w.serialize(PredictionRow {
            row: i + 1,
            group: g.clone(),
            point: p.point,
            lower: p.lower,
            upper: p.upper,
        })
        .map_err(CliError::csv(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_predictions(path: &Path) -> CliResult<Vec<PredictionRow>> {
    let mut r = csv::Reader::from_path(path).map_err(CliError::csv(path))?;
    r.deserialize()
        .collect::<Result<_, _>>()
        .map_err(CliError::csv(path))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    /// Mean and central 95% interval of a sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            lower: hebart_core::predict::quantile_sorted(&sorted, 0.025),
            upper: hebart_core::predict::quantile_sorted(&sorted, 0.975),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rmse {
    pub standardized: f64,
    pub raw: f64,
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: String,
    pub n_train: usize,
    pub n_test: usize,
    pub draws: usize,
    pub response_center: f64,
    pub response_scale: f64,
    /// Posterior of the noise precision on the standardized scale.
    pub tau: Option<Interval>,
    pub k1: Option<Interval>,
    /// Posterior of `sqrt(k1 / tau)` in raw response units.
    pub intra_group_sd: Option<Interval>,
    pub tree_acceptance_rate: f64,
    pub k1_acceptance_rate: Option<f64>,
    pub train_rmse: Rmse,
    pub test_rmse: Option<Rmse>,
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(CliError::io(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}
