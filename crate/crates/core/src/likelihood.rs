//! Collapsed node likelihood.
//!
//! With the leaf mean `mu ~ N(0, c2/tau)` and group means
//! `mu_j ~ N(mu, c1/tau)` integrated out (`c1 = k1/P`, `c2 = k2/P`), a
//! node's residual vector `r` is `MVN(0, A/tau)` with
//! `A = I + c1 M M' + c2 1 1'`, `M` the group indicator matrix. `I + c1 M M'`
//! is block diagonal with one rank-one block per group, so both the
//! determinant and `r' A^-1 r` reduce to sums over groups:
//!
//! ```text
//! s = sum_j n_j / (1 + c1 n_j)        t = sum_j S_j / (1 + c1 n_j)
//! log|A| = sum_j log(1 + c1 n_j) + log(1 + c2 s)
//! r'A^-1 r = Q - sum_j c1 S_j^2 / (1 + c1 n_j) - c2 t^2 / (1 + c2 s)
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::data::Dataset;
use crate::error::{require_positive, Error, Result};
use crate::state::SamplerState;
use crate::tree::{NodeId, Tree};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupStat {
    pub group: usize,
    pub count: usize,
    pub sum: f64,
}

/// Residual counts and sums for one node, overall and per present group.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeSuffStats {
    /// Present groups only, ascending by group index.
    pub groups: Vec<GroupStat>,
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl NodeSuffStats {
    /// `(sum_j n_j / (1 + c1 n_j), sum_j S_j / (1 + c1 n_j))`, i.e.
    /// `1' Psi^-1 1` and `1' Psi^-1 r` for `Psi = I + c1 M M'`.
    pub fn shrunk_totals(&self, c1: f64) -> (f64, f64) {
        self.groups.iter().fold((0.0, 0.0), |(s, t), g| {
            let d = 1.0 + c1 * g.count as f64;
            (s + g.count as f64 / d, t + g.sum / d)
        })
    }

    pub fn group(&self, group: usize) -> Option<&GroupStat> {
        self.groups
            .binary_search_by_key(&group, |g| g.group)
            .ok()
            .map(|i| &self.groups[i])
    }
}

pub fn collect_suff_stats(
    residuals: &[f64],
    rows: &[usize],
    groups: &[usize],
) -> Result<NodeSuffStats> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter("node holds no rows".into()));
    }
    let mut per_group: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    let mut stats = NodeSuffStats::default();
    for &i in rows {
        let r = residuals[i];
        let e = per_group.entry(groups[i]).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += r;
        stats.count += 1;
        stats.sum += r;
        stats.sum_sq += r * r;
    }
    stats.groups = per_group
        .into_iter()
        .map(|(group, (count, sum))| GroupStat { group, count, sum })
        .collect();
    Ok(stats)
}

/// Sufficient statistics of every terminal of `tree`, given each row's
/// terminal in `assignment`. Returned in ascending node-id order.
pub fn leaf_suff_stats(
    tree: &Tree,
    assignment: &[NodeId],
    residuals: &[f64],
    groups: &[usize],
    n_groups: usize,
) -> Vec<(NodeId, NodeSuffStats)> {
    let leaves = tree.terminals();
    let mut slot = vec![usize::MAX; tree.len()];
    for (k, &leaf) in leaves.iter().enumerate() {
        slot[leaf] = k;
    }
    let mut counts = vec![0usize; leaves.len() * n_groups];
    let mut sums = vec![0.0; leaves.len() * n_groups];
    let mut sum_sq = vec![0.0; leaves.len()];
    for ((&node, &r), &g) in assignment.iter().zip(residuals).zip(groups) {
        let k = slot[node];
        counts[k * n_groups + g] += 1;
        sums[k * n_groups + g] += r;
        sum_sq[k] += r * r;
    }
    leaves
        .iter()
        .enumerate()
        .map(|(k, &leaf)| {
            let range = k * n_groups..(k + 1) * n_groups;
            let groups: Vec<GroupStat> = range
                .clone()
                .filter(|&at| counts[at] > 0)
                .map(|at| GroupStat {
                    group: at - k * n_groups,
                    count: counts[at],
                    sum: sums[at],
                })
                .collect();
            let stats = NodeSuffStats {
                count: groups.iter().map(|g| g.count).sum(),
                sum: groups.iter().map(|g| g.sum).sum(),
                sum_sq: sum_sq[k],
                groups,
            };
            (leaf, stats)
        })
        .collect()
}

/// Log-density of a node's residuals with the leaf and group means
/// integrated out. `k1 = 0` drops the group layer (plain BART).
pub fn node_log_marginal(
    stats: &NodeSuffStats,
    tau: f64,
    k1: f64,
    k2: f64,
    num_trees: usize,
) -> Result<f64> {
    require_positive("tau", tau)?;
    require_positive("k2", k2)?;
    if !(k1 >= 0.0 && k1.is_finite()) {
        return Err(Error::InvalidParameter(format!("k1 must be non-negative, got {k1}")));
    }
    if num_trees == 0 {
        return Err(Error::InvalidParameter("number of trees must be positive".into()));
    }
    if stats.count == 0 {
        return Err(Error::InvalidParameter("node holds no rows".into()));
    }
    Ok(log_marginal_unchecked(stats, tau, k1 / num_trees as f64, k2 / num_trees as f64))
}

#[inline]
pub(crate) fn log_marginal_unchecked(stats: &NodeSuffStats, tau: f64, c1: f64, c2: f64) -> f64 {
    let mut log_det = 0.0;
    let mut s = 0.0;
    let mut t = 0.0;
    let mut group_quad = 0.0;
    for g in &stats.groups {
        let n = g.count as f64;
        let d = 1.0 + c1 * n;
        log_det += (c1 * n).ln_1p();
        s += n / d;
        t += g.sum / d;
        group_quad += c1 * g.sum * g.sum / d;
    }
    log_det += (c2 * s).ln_1p();
    let quad = stats.sum_sq - group_quad - c2 * t * t / (1.0 + c2 * s);
    let n = stats.count as f64;
    -0.5 * n * (2.0 * PI).ln() + 0.5 * n * tau.ln() - 0.5 * log_det - 0.5 * tau * quad
}

/// Sum of collapsed node log-likelihoods over every terminal of every tree,
/// each tree scored on its own partial residuals.
pub fn forest_log_marginal(state: &SamplerState, dataset: &Dataset, k1: f64, k2: f64) -> Result<f64> {
    let stats = forest_suff_stats(state, dataset);
    sum_log_marginal(&stats, state.tau, k1, k2, state.forest.len())
}

/// Per tree, the leaf statistics of that tree's partial residuals.
pub fn forest_suff_stats(state: &SamplerState, dataset: &Dataset) -> Vec<Vec<NodeSuffStats>> {
    (0..state.forest.len())
        .map(|p| {
            let residuals = state.partial_residuals(dataset, p);
            leaf_suff_stats(
                &state.forest[p],
                &state.node_assignment[p],
                &residuals,
                dataset.groups(),
                dataset.n_groups(),
            )
            .into_iter()
            .map(|(_, s)| s)
            .collect()
        })
        .collect()
}

pub fn sum_log_marginal(
    stats: &[Vec<NodeSuffStats>],
    tau: f64,
    k1: f64,
    k2: f64,
    num_trees: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for tree in stats {
        for node in tree {
            total += node_log_marginal(node, tau, k1, k2, num_trees)?;
        }
    }
    Ok(total)
}
