//! Posterior predictive summaries for new rows.
//!
//! Each stored forest contributes one prediction per row. Within a tree the
//! routed terminal supplies:
//! - the group's own mean when the group is known and present there;
//! - a fresh draw from `N(mu, k1 / (P tau))` when the group was seen in
//!   training but never reached that terminal;
//! - the terminal's overall mean otherwise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Mode;
use crate::distributions::{sample_normal, RngStream};
use crate::error::{Error, Result};
use crate::model::FittedModel;
use crate::tree::Node;

/// Stream ids at or above this offset are reserved for prediction.
pub const PREDICTION_STREAM_OFFSET: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Posterior mean on the raw response scale.
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    /// Per-draw predictions on the standardized scale.
    pub draws: Option<Vec<f64>>,
}

/// Per-draw predictions for one row on the standardized scale.
pub fn predictive_draws<R: Rng + ?Sized>(
    model: &FittedModel,
    x: &[f64],
    group: Option<usize>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if x.len() != model.n_covariates() {
        return Err(Error::Dimension(format!(
            "row has {} covariates, model expects {}",
            x.len(),
            model.n_covariates()
        )));
    }
    let forests = model.draws.forests().ok_or(Error::NoStoredForests)?;
    if forests.is_empty() {
        return Err(Error::NoStoredForests);
    }
    let trained = match (model.mode, group) {
        (Mode::Hierarchical, Some(g)) if model.is_trained(g) => Some(g),
        _ => None,
    };
    let p = model.draws.num_trees as f64;
    let mut out = Vec::with_capacity(forests.len());
    for (d, forest) in forests.iter().enumerate() {
        let mut total = 0.0;
        for tree in forest {
            let Node::Terminal { mu, group_mus, .. } = tree.node(tree.route(x)) else {
                unreachable!("routing ends at a terminal")
            };
            total += match trained {
                Some(g) => match group_mus.get(&g) {
                    Some(v) => *v,
                    None => {
                        let precision = p * model.draws.taus[d] / model.draws.k1s[d];
                        sample_normal(*mu, precision, rng)?
                    }
                },
                None => *mu,
            };
        }
        out.push(total);
    }
    Ok(out)
}

/// Summarize one row: mean and central credible interval at `level`,
/// mapped back to the raw response scale.
pub fn predict_row<R: Rng + ?Sized>(
    model: &FittedModel,
    x: &[f64],
    group: Option<usize>,
    level: f64,
    rng: &mut R,
) -> Result<Prediction> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "credible level must lie in (0, 1), got {level}"
        )));
    }
    let draws = predictive_draws(model, x, group, rng)?;
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let mut sorted = draws.clone();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let t = model.transform;
    Ok(Prediction {
        point: t.invert(mean),
        lower: t.invert(quantile_sorted(&sorted, tail)),
        upper: t.invert(quantile_sorted(&sorted, 1.0 - tail)),
        draws: Some(draws),
    })
}

/// Predict many rows; row `i` draws from its own stream so results do not
/// depend on evaluation order.
pub fn predict_rows(
    model: &FittedModel,
    rows: &[Vec<f64>],
    groups: &[Option<usize>],
    level: f64,
    seed: u64,
) -> Result<Vec<Prediction>> {
    if rows.len() != groups.len() {
        return Err(Error::Dimension(format!(
            "{} rows but {} group entries",
            rows.len(),
            groups.len()
        )));
    }
    rows.iter()
        .zip(groups)
        .enumerate()
        .map(|(i, (x, g))| {
            let mut rng = RngStream::new(seed, PREDICTION_STREAM_OFFSET + i as u64);
            predict_row(model, x, *g, level, &mut rng)
        })
        .collect()
}

/// Linear-interpolation quantile of sorted data (`(n - 1) q` positioning).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn rmse(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    if predictions.len() != truth.len() || truth.is_empty() {
        return Err(Error::Dimension(format!(
            "rmse needs equal non-empty lengths, got {} and {}",
            predictions.len(),
            truth.len()
        )));
    }
    let sse: f64 = predictions.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    Ok((sse / truth.len() as f64).sqrt())
}

/// Mean and half-width `1.96 sd / sqrt(k)` of fold-level results, with the
/// sample standard deviation.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    (mean, 1.96 * sd / k.sqrt())
}
