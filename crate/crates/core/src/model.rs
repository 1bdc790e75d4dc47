use serde::{Deserialize, Serialize};

use crate::config::{Hyperparams, Mode};
use crate::data::{Dataset, LabelTable, ResponseTransform};
use crate::distributions::RngStream;
use crate::error::{Error, Result};
use crate::sampler::{run_chain, ChainConfig, PosteriorDraws};

/// Posterior draws together with everything needed to score new rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub mode: Mode,
    pub hyperparams: Hyperparams,
    pub covariate_names: Vec<String>,
    pub response_name: String,
    pub labels: LabelTable,
    /// `trained_groups[j]` is true when group `j` had training rows.
    pub trained_groups: Vec<bool>,
    pub transform: ResponseTransform,
    pub draws: PosteriorDraws,
}

impl FittedModel {
    /// Restore lookup state after deserialization.
    pub fn reindex(&mut self) {
        self.labels.reindex();
    }

    /// Dense index of a group with training rows, `None` otherwise.
    pub fn group_index(&self, label: &str) -> Option<usize> {
        self.labels.index_of(label).filter(|&g| self.is_trained(g))
    }

    pub fn is_trained(&self, group: usize) -> bool {
        self.trained_groups.get(group).copied().unwrap_or(false)
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    /// Posterior mean of `sqrt(k1 / tau)` on the raw response scale.
    pub fn intra_group_sd_mean(&self) -> Option<f64> {
        let sd = self.draws.intra_group_sd(self.transform.scale);
        if sd.is_empty() {
            None
        } else {
            Some(sd.iter().sum::<f64>() / sd.len() as f64)
        }
    }
}

/// Run one chain and package its draws with the dataset's metadata.
pub fn fit(dataset: &Dataset, config: &ChainConfig, rng: &mut RngStream) -> Result<FittedModel> {
    if dataset.n_covariates() == 0 {
        return Err(Error::Dimension("at least one covariate is required".into()));
    }
    let draws = run_chain(dataset, config, rng)?;
    Ok(FittedModel {
        mode: config.mode,
        hyperparams: config.hyperparams.clone(),
        covariate_names: dataset.covariate_names().to_vec(),
        response_name: dataset.response_name().to_string(),
        labels: dataset.labels().clone(),
        trained_groups: dataset.groups_present(),
        transform: dataset.transform(),
        draws,
    })
}
