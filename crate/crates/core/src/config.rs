use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities of proposing each tree move. Need not sum to one; they are
/// normalized on use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoveProbs {
    pub grow: f64,
    pub prune: f64,
    pub change: f64,
    pub swap: f64,
}

impl Default for MoveProbs {
    fn default() -> Self {
        Self {
            grow: 0.25,
            prune: 0.25,
            change: 0.4,
            swap: 0.1,
        }
    }
}

impl MoveProbs {
    pub fn as_array(&self) -> [f64; 4] {
        [self.grow, self.prune, self.change, self.swap]
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    fn validate(&self) -> Result<()> {
        if self.as_array().iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Config("move probabilities must be non-negative".into()));
        }
        if self.total() <= 0.0 {
            return Err(Error::Config("move probabilities must not all be zero".into()));
        }
        Ok(())
    }
}

/// Every fixed constant of the model and the MCMC schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub num_trees: usize,
    pub tree_alpha: f64,
    pub tree_beta: f64,
    pub k2: f64,
    pub tau_shape: f64,
    pub tau_rate: f64,
    /// Weibull prior on `k1`: scale.
    pub weibull_scale: f64,
    /// Weibull prior on `k1`: shape.
    pub weibull_shape: f64,
    pub k1_proposal_low: f64,
    pub k1_proposal_high: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub rng_seed: u64,
    pub move_probs: MoveProbs,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            num_trees: 10,
            tree_alpha: 0.95,
            tree_beta: 2.0,
            k2: 5.0,
            tau_shape: 0.5,
            tau_rate: 1.0,
            weibull_scale: 10.0,
            weibull_shape: 1.0,
            k1_proposal_low: 0.0,
            k1_proposal_high: 20.0,
            iterations: 1500,
            burn_in: 500,
            thin: 1,
            rng_seed: 0,
            move_probs: MoveProbs::default(),
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tree_beta", self.tree_beta),
            ("k2", self.k2),
            ("tau_shape", self.tau_shape),
            ("tau_rate", self.tau_rate),
            ("weibull_scale", self.weibull_scale),
            ("weibull_shape", self.weibull_shape),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.num_trees == 0 {
            return Err(Error::Config("num_trees must be at least 1".into()));
        }
        if !(self.tree_alpha > 0.0 && self.tree_alpha < 1.0) {
            return Err(Error::Config(format!(
                "tree_alpha must lie in (0, 1), got {}",
                self.tree_alpha
            )));
        }
        if !(self.k1_proposal_low >= 0.0
            && self.k1_proposal_high.is_finite()
            && self.k1_proposal_high > self.k1_proposal_low)
        {
            return Err(Error::Config(format!(
                "k1 proposal bounds must satisfy 0 <= low < high, got ({}, {})",
                self.k1_proposal_low, self.k1_proposal_high
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.burn_in > self.iterations {
            return Err(Error::Config(format!(
                "burn_in ({}) exceeds iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        self.move_probs.validate()
    }

    /// Number of draws a chain with this schedule stores.
    pub fn draw_count(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    /// Names of the `k1`-only settings that differ from their defaults.
    /// Standard BART ignores all of them.
    pub fn k1_fields_set(&self) -> Vec<&'static str> {
        let d = Self::default();
        let mut set = Vec::new();
        if self.weibull_scale != d.weibull_scale {
            set.push("weibull_scale");
        }
        if self.weibull_shape != d.weibull_shape {
            set.push("weibull_shape");
        }
        if self.k1_proposal_low != d.k1_proposal_low {
            set.push("k1_proposal_low");
        }
        if self.k1_proposal_high != d.k1_proposal_high {
            set.push("k1_proposal_high");
        }
        set
    }
}

/// Whether terminal nodes carry per-group parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Hierarchical,
    Bart,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Hierarchical => "HE-BART",
            Mode::Bart => "BART",
        }
    }
}
