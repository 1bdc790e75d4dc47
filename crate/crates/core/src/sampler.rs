//! Metropolis-within-Gibbs sampler.
//!
//! One sweep visits every tree in turn: a Metropolis-Hastings structure move
//! scored on the tree's partial residuals with the leaf parameters
//! integrated out, then conjugate draws of each leaf mean and its group
//! means. After the trees come a Gibbs draw of `tau` and a
//! Metropolis-Hastings step on `k1` with an independent uniform proposal.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::{Hyperparams, Mode};
use crate::data::Dataset;
use crate::distributions::{sample_gamma, sample_normal, sample_uniform, weibull_logpdf, RngStream};
use crate::error::{require_positive, Error, Result};
use crate::likelihood::{forest_suff_stats, leaf_suff_stats, log_marginal_unchecked, sum_log_marginal, NodeSuffStats};
use crate::state::{assign_rows, SamplerState};
use crate::tree::{Node, NodeId, Tree};
use crate::tree_ops::{log_tree_prior, propose, Proposal};

#[derive(Clone, Debug)]
pub struct ChainConfig {
    pub hyperparams: Hyperparams,
    pub mode: Mode,
    /// Keep every stored draw's forest (needed for prediction on new rows).
    pub store_trees: bool,
    /// When false the forest stays as initialized (stumps).
    pub update_trees: bool,
    pub update_tau: bool,
    pub update_k1: bool,
    /// Defaults to the prior mean `tau_shape / tau_rate`.
    pub initial_tau: Option<f64>,
    /// Defaults to the midpoint of the `k1` proposal interval.
    pub initial_k1: Option<f64>,
}

impl ChainConfig {
    pub fn new(hyperparams: Hyperparams, mode: Mode) -> Self {
        Self {
            hyperparams,
            mode,
            store_trees: true,
            update_trees: true,
            update_tau: true,
            update_k1: true,
            initial_tau: None,
            initial_k1: None,
        }
    }
}

/// What the chain did in one sweep; passed to the progress observer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub tau: f64,
    pub k1: f64,
    pub tree_accepted: Vec<bool>,
    /// `None` when no `k1` step ran.
    pub k1_accepted: Option<bool>,
    pub stored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DrawStorage {
    Forests(Vec<Vec<Tree>>),
    /// Per-draw training fits, kept when forests are not.
    Fitted(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub mode: Mode,
    pub num_trees: usize,
    pub taus: Vec<f64>,
    pub k1s: Vec<f64>,
    pub storage: DrawStorage,
    pub trace: Vec<IterationRecord>,
}

impl PosteriorDraws {
    pub fn draw_count(&self) -> usize {
        self.taus.len()
    }

    pub fn forests(&self) -> Option<&[Vec<Tree>]> {
        match &self.storage {
            DrawStorage::Forests(f) => Some(f),
            DrawStorage::Fitted(_) => None,
        }
    }

    /// Per-draw samples of `sqrt(k1 / tau)`, scaled by `response_scale` to
    /// express them in raw response units.
    pub fn intra_group_sd(&self, response_scale: f64) -> Vec<f64> {
        self.k1s
            .iter()
            .zip(&self.taus)
            .map(|(k1, tau)| (k1 / tau).sqrt() * response_scale)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalPosterior {
    pub mean: f64,
    pub variance: f64,
}

/// Conditional of a leaf mean with its group means integrated out:
/// precision `tau (1'Psi^-1 1 + P/k2)`, mean
/// `1'Psi^-1 r / (1'Psi^-1 1 + P/k2)`.
pub fn node_mu_posterior(
    stats: &NodeSuffStats,
    tau: f64,
    k1: f64,
    k2: f64,
    num_trees: usize,
) -> NormalPosterior {
    let p = num_trees as f64;
    let (s, t) = stats.shrunk_totals(k1 / p);
    let precision = s + p / k2;
    NormalPosterior {
        mean: t / precision,
        variance: 1.0 / (tau * precision),
    }
}

pub fn sample_node_mu<R: rand::Rng + ?Sized>(
    stats: &NodeSuffStats,
    tau: f64,
    k1: f64,
    k2: f64,
    num_trees: usize,
    rng: &mut R,
) -> Result<f64> {
    require_positive("tau", tau)?;
    require_positive("k2", k2)?;
    if !(k1 >= 0.0) || num_trees == 0 || stats.count == 0 {
        return Err(Error::InvalidParameter(
            "leaf mean draw needs k1 >= 0, at least one tree and a non-empty node".into(),
        ));
    }
    let post = node_mu_posterior(stats, tau, k1, k2, num_trees);
    sample_normal(post.mean, 1.0 / post.variance, rng)
}

/// Conditional of a group mean given its leaf mean: precision
/// `tau (n_j + P/k1)`, mean `(P mu / k1 + S_j) / (n_j + P/k1)`.
pub fn group_mu_posterior(
    mu: f64,
    count: usize,
    sum: f64,
    tau: f64,
    k1: f64,
    num_trees: usize,
) -> NormalPosterior {
    let shrink = num_trees as f64 / k1;
    let precision = count as f64 + shrink;
    NormalPosterior {
        mean: (shrink * mu + sum) / precision,
        variance: 1.0 / (tau * precision),
    }
}

pub fn sample_group_mu<R: rand::Rng + ?Sized>(
    mu: f64,
    count: usize,
    sum: f64,
    tau: f64,
    k1: f64,
    num_trees: usize,
    rng: &mut R,
) -> Result<f64> {
    require_positive("tau", tau)?;
    require_positive("k1", k1)?;
    let post = group_mu_posterior(mu, count, sum, tau, k1, num_trees);
    sample_normal(post.mean, 1.0 / post.variance, rng)
}

/// Shape and rate of the `tau` full conditional.
///
/// The shape counts the squared terms in the rate: one per row, one per
/// leaf mean and one per instantiated group mean.
pub fn tau_posterior(
    state: &SamplerState,
    dataset: &Dataset,
    hp: &Hyperparams,
    mode: Mode,
) -> (f64, f64) {
    let p = state.num_trees() as f64;
    let sse: f64 = dataset
        .response()
        .iter()
        .zip(&state.fitted)
        .map(|(y, f)| (y - f).powi(2))
        .sum();
    let mut leaves = 0usize;
    let mut group_params = 0usize;
    let mut leaf_sq = 0.0;
    let mut group_sq = 0.0;
    for tree in &state.forest {
        for node in tree.nodes() {
            if let Node::Terminal { mu, group_mus, .. } = node {
                leaves += 1;
                leaf_sq += mu * mu;
                if mode == Mode::Hierarchical {
                    group_params += group_mus.len();
                    group_sq += group_mus.values().map(|m| (m - mu).powi(2)).sum::<f64>();
                }
            }
        }
    }
    let shape = (dataset.n_rows() + group_params + leaves) as f64 / 2.0 + hp.tau_shape;
    let mut rate = sse / 2.0 + p * leaf_sq / (2.0 * hp.k2) + hp.tau_rate;
    if mode == Mode::Hierarchical && group_params > 0 {
        rate += p * group_sq / (2.0 * state.k1);
    }
    (shape, rate)
}

pub fn sample_tau<R: rand::Rng + ?Sized>(
    state: &SamplerState,
    dataset: &Dataset,
    hp: &Hyperparams,
    mode: Mode,
    rng: &mut R,
) -> Result<f64> {
    let (shape, rate) = tau_posterior(state, dataset, hp, mode);
    sample_gamma(shape, rate, rng)
}

/// Collapsed log-likelihood of a tree's leaves plus its structure prior.
pub fn tree_log_posterior(
    tree: &Tree,
    assignment: &[NodeId],
    residuals: &[f64],
    dataset: &Dataset,
    tau: f64,
    k1: f64,
    hp: &Hyperparams,
) -> f64 {
    let p = hp.num_trees as f64;
    let (c1, c2) = (k1 / p, hp.k2 / p);
    let loglik: f64 = leaf_suff_stats(tree, assignment, residuals, dataset.groups(), dataset.n_groups())
        .iter()
        .map(|(_, s)| {
            if s.count == 0 {
                // empty leaves only arise from inadmissible trees
                f64::NEG_INFINITY
            } else {
                log_marginal_unchecked(s, tau, c1, c2)
            }
        })
        .sum();
    loglik + log_tree_prior(tree, hp.tree_alpha, hp.tree_beta, dataset)
}

/// `k1` as seen by the likelihood: zero drops the group layer.
fn effective_k1(state: &SamplerState, mode: Mode) -> f64 {
    match mode {
        Mode::Hierarchical => state.k1,
        Mode::Bart => 0.0,
    }
}

/// Accept with probability `min(1, exp(log_ratio))`.
fn metropolis_accept<R: rand::Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

/// Log acceptance ratio of replacing tree `p` by `candidate`.
pub fn tree_log_acceptance(
    state: &SamplerState,
    dataset: &Dataset,
    p: usize,
    residuals: &[f64],
    candidate: &Tree,
    candidate_assignment: &[NodeId],
    log_proposal_ratio: f64,
    hp: &Hyperparams,
    mode: Mode,
) -> f64 {
    let k1 = effective_k1(state, mode);
    let current = tree_log_posterior(
        &state.forest[p],
        &state.node_assignment[p],
        residuals,
        dataset,
        state.tau,
        k1,
        hp,
    );
    let proposed = tree_log_posterior(
        candidate,
        candidate_assignment,
        residuals,
        dataset,
        state.tau,
        k1,
        hp,
    );
    proposed - current + log_proposal_ratio
}

fn structure_step<R: rand::Rng + ?Sized>(
    state: &mut SamplerState,
    dataset: &Dataset,
    p: usize,
    residuals: &[f64],
    hp: &Hyperparams,
    mode: Mode,
    rng: &mut R,
) -> bool {
    let Proposal::Move(m) = propose(&state.forest[p], dataset, &hp.move_probs, rng) else {
        return false;
    };
    let assignment = assign_rows(&m.new_tree, dataset);
    let log_ratio = tree_log_acceptance(
        state,
        dataset,
        p,
        residuals,
        &m.new_tree,
        &assignment,
        m.log_proposal_ratio,
        hp,
        mode,
    );
    let accepted = metropolis_accept(log_ratio, rng);
    if accepted {
        state.forest[p] = m.new_tree;
        state.node_assignment[p] = assignment;
    }
    accepted
}

/// One Metropolis-Hastings structure update of tree `p`. Leaf parameters of
/// an accepted tree are placeholders until [`draw_leaf_params`] runs.
pub fn mh_tree_update<R: rand::Rng + ?Sized>(
    state: &mut SamplerState,
    dataset: &Dataset,
    p: usize,
    hp: &Hyperparams,
    mode: Mode,
    rng: &mut R,
) -> bool {
    let residuals = state.partial_residuals(dataset, p);
    structure_step(state, dataset, p, &residuals, hp, mode, rng)
}

/// Redraw every leaf mean of tree `p`, then each present group's mean, and
/// refresh the cached fit.
pub fn draw_leaf_params<R: rand::Rng + ?Sized>(
    state: &mut SamplerState,
    dataset: &Dataset,
    p: usize,
    residuals: &[f64],
    hp: &Hyperparams,
    mode: Mode,
    rng: &mut R,
) -> Result<()> {
    let k1 = effective_k1(state, mode);
    let leaves = leaf_suff_stats(
        &state.forest[p],
        &state.node_assignment[p],
        residuals,
        dataset.groups(),
        dataset.n_groups(),
    );
    for (leaf, stats) in leaves {
        let mu = sample_node_mu(&stats, state.tau, k1, hp.k2, hp.num_trees, rng)?;
        let mut group_mus = BTreeMap::new();
        if mode == Mode::Hierarchical {
            for g in &stats.groups {
                let v = sample_group_mu(mu, g.count, g.sum, state.tau, state.k1, hp.num_trees, rng)?;
                group_mus.insert(g.group, v);
            }
        }
        state.forest[p].set_leaf(leaf, mu, group_mus);
    }
    let tree = &state.forest[p];
    for (i, f) in state.fitted.iter_mut().enumerate() {
        let leaf = state.node_assignment[p][i];
        let g = dataset.groups()[i];
        *f = dataset.response()[i] - residuals[i] + tree.leaf_value(leaf, Some(g));
    }
    Ok(())
}

/// Independence Metropolis-Hastings step on `k1` with a `Uniform(a, b)`
/// proposal and Weibull prior. The likelihood is the collapsed marginal of
/// every tree's partial residuals.
pub fn mh_k1_update<R: rand::Rng + ?Sized>(
    state: &mut SamplerState,
    dataset: &Dataset,
    hp: &Hyperparams,
    rng: &mut R,
) -> Result<bool> {
    let proposal = sample_uniform(hp.k1_proposal_low, hp.k1_proposal_high, rng)?;
    let log_ratio = k1_log_acceptance(state, dataset, hp, proposal)?;
    let accepted = metropolis_accept(log_ratio, rng);
    if accepted {
        state.k1 = proposal;
    }
    Ok(accepted)
}

pub fn k1_log_acceptance(
    state: &SamplerState,
    dataset: &Dataset,
    hp: &Hyperparams,
    proposal: f64,
) -> Result<f64> {
    if !(proposal > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    if proposal == state.k1 {
        return Ok(0.0);
    }
    let stats = forest_suff_stats(state, dataset);
    let p = state.num_trees();
    let current = sum_log_marginal(&stats, state.tau, state.k1, hp.k2, p)?
        + weibull_logpdf(state.k1, hp.weibull_scale, hp.weibull_shape)?;
    let proposed = sum_log_marginal(&stats, state.tau, proposal, hp.k2, p)?
        + weibull_logpdf(proposal, hp.weibull_scale, hp.weibull_shape)?;
    Ok(proposed - current)
}

/// HE-BART chain.
pub fn run_chain(dataset: &Dataset, config: &ChainConfig, rng: &mut RngStream) -> Result<PosteriorDraws> {
    run_chain_observed(dataset, config, rng, &mut |_| {})
}

/// Standard BART: the same loop with the group layer switched off.
pub fn run_bart_mode(
    dataset: &Dataset,
    config: &ChainConfig,
    rng: &mut RngStream,
) -> Result<PosteriorDraws> {
    let config = ChainConfig {
        mode: Mode::Bart,
        ..config.clone()
    };
    run_chain(dataset, &config, rng)
}

pub fn run_chain_observed(
    dataset: &Dataset,
    config: &ChainConfig,
    rng: &mut RngStream,
    observer: &mut dyn FnMut(&IterationRecord),
) -> Result<PosteriorDraws> {
    let hp = &config.hyperparams;
    hp.validate()?;
    let mode = config.mode;
    if mode == Mode::Bart {
        let ignored = hp.k1_fields_set();
        if !ignored.is_empty() {
            log::warn!("standard BART ignores {}", ignored.join(", "));
        }
    }
    let tau0 = config.initial_tau.unwrap_or(hp.tau_shape / hp.tau_rate);
    let k1_0 = match mode {
        Mode::Hierarchical => config
            .initial_k1
            .unwrap_or((hp.k1_proposal_low + hp.k1_proposal_high) / 2.0),
        Mode::Bart => 0.0,
    };
    require_positive("initial tau", tau0)?;
    if mode == Mode::Hierarchical {
        require_positive("initial k1", k1_0)?;
    }
    let mut state = SamplerState::stumps(dataset, hp.num_trees, tau0, k1_0);

    let n_draws = hp.draw_count();
    let mut taus = Vec::with_capacity(n_draws);
    let mut k1s = Vec::with_capacity(n_draws);
    let mut forests = Vec::new();
    let mut fits = Vec::new();
    let mut trace = Vec::with_capacity(hp.iterations);

    for iteration in 0..hp.iterations {
        let mut tree_accepted = vec![false; hp.num_trees];
        for p in 0..hp.num_trees {
            let residuals = state.partial_residuals(dataset, p);
            if config.update_trees {
                tree_accepted[p] = structure_step(&mut state, dataset, p, &residuals, hp, mode, rng);
            }
            draw_leaf_params(&mut state, dataset, p, &residuals, hp, mode, rng)?;
        }
        state.fitted = state.recompute_fitted(dataset);
        if config.update_tau {
            state.tau = sample_tau(&state, dataset, hp, mode, rng)?;
        }
        let k1_accepted = if mode == Mode::Hierarchical && config.update_k1 {
            Some(mh_k1_update(&mut state, dataset, hp, rng)?)
        } else {
            None
        };
        if !state.tau.is_finite() || state.tau <= 0.0 {
            return Err(Error::NonFinite(format!("tau at iteration {iteration}")));
        }
        if state.fitted.iter().any(|f| !f.is_finite()) {
            return Err(Error::NonFinite(format!("fit at iteration {iteration}")));
        }

        let stored = iteration >= hp.burn_in && (iteration - hp.burn_in + 1).is_multiple_of(hp.thin);
        if stored {
            taus.push(state.tau);
            k1s.push(state.k1);
            if config.store_trees {
                forests.push(state.forest.clone());
            } else {
                fits.push(state.fitted.clone());
            }
        }
        let record = IterationRecord {
            iteration,
            tau: state.tau,
            k1: state.k1,
            tree_accepted,
            k1_accepted,
            stored,
        };
        if (iteration + 1) % 100 == 0 {
            log::debug!("iteration {}: tau {:.4}, k1 {:.3}", iteration + 1, state.tau, state.k1);
        }
        observer(&record);
        trace.push(record);
    }

    Ok(PosteriorDraws {
        mode,
        num_trees: hp.num_trees,
        taus,
        k1s,
        storage: if config.store_trees {
            DrawStorage::Forests(forests)
        } else {
            DrawStorage::Fitted(fits)
        },
        trace,
    })
}
