use crate::data::Dataset;
use crate::tree::{NodeId, Tree};

/// Current forest and scalar parameters of one chain, plus cached fits.
#[derive(Clone, Debug)]
pub struct SamplerState {
    pub forest: Vec<Tree>,
    pub tau: f64,
    pub k1: f64,
    /// Sum-of-trees prediction for every training row.
    pub fitted: Vec<f64>,
    /// Per tree, the terminal each training row falls in.
    pub node_assignment: Vec<Vec<NodeId>>,
}

impl SamplerState {
    /// `num_trees` stumps with zero leaves.
    pub fn stumps(dataset: &Dataset, num_trees: usize, tau: f64, k1: f64) -> Self {
        let n = dataset.n_rows();
        Self {
            forest: vec![Tree::stump(); num_trees],
            tau,
            k1,
            fitted: vec![0.0; n],
            node_assignment: vec![vec![0; n]; num_trees],
        }
    }

    /// Build from an explicit forest, routing every row and summing fits.
    pub fn from_forest(dataset: &Dataset, forest: Vec<Tree>, tau: f64, k1: f64) -> Self {
        let node_assignment = forest.iter().map(|t| assign_rows(t, dataset)).collect();
        let mut state = Self {
            forest,
            tau,
            k1,
            fitted: Vec::new(),
            node_assignment,
        };
        state.fitted = state.recompute_fitted(dataset);
        state
    }

    pub fn num_trees(&self) -> usize {
        self.forest.len()
    }

    /// Tree `p`'s prediction for every training row.
    pub fn contribution(&self, dataset: &Dataset, p: usize) -> Vec<f64> {
        let tree = &self.forest[p];
        self.node_assignment[p]
            .iter()
            .zip(dataset.groups())
            .map(|(&leaf, &g)| tree.leaf_value(leaf, Some(g)))
            .collect()
    }

    /// `y - sum_{t != p} G(x, T_t)` for every training row.
    pub fn partial_residuals(&self, dataset: &Dataset, p: usize) -> Vec<f64> {
        let tree = &self.forest[p];
        dataset
            .response()
            .iter()
            .zip(&self.fitted)
            .zip(&self.node_assignment[p])
            .zip(dataset.groups())
            .map(|(((&y, &f), &leaf), &g)| y - f + tree.leaf_value(leaf, Some(g)))
            .collect()
    }

    /// Fitted values recomputed by routing every row through every tree.
    pub fn recompute_fitted(&self, dataset: &Dataset) -> Vec<f64> {
        let mut fitted = vec![0.0; dataset.n_rows()];
        for tree in &self.forest {
            for (i, f) in fitted.iter_mut().enumerate() {
                let leaf = tree.route_by(|v| dataset.value(i, v));
                *f += tree.leaf_value(leaf, Some(dataset.groups()[i]));
            }
        }
        fitted
    }

    /// Largest gap between cached and recomputed fits, and whether every
    /// cached assignment matches routing.
    pub fn coherence(&self, dataset: &Dataset) -> (f64, bool) {
        let gap = self
            .recompute_fitted(dataset)
            .iter()
            .zip(&self.fitted)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let routed = self
            .forest
            .iter()
            .zip(&self.node_assignment)
            .all(|(t, a)| assign_rows(t, dataset) == *a);
        (gap, routed)
    }
}

pub fn assign_rows(tree: &Tree, dataset: &Dataset) -> Vec<NodeId> {
    (0..dataset.n_rows())
        .map(|i| tree.route_by(|v| dataset.value(i, v)))
        .collect()
}
