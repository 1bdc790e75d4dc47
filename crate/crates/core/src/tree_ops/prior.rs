use crate::data::Dataset;
use crate::tree::Tree;

use super::cutpoints::{count_cutpoints, is_admissible, node_rows, splittable_vars};

/// `log P_split(d) = log(alpha) - beta * log(1 + d)`.
pub fn log_split_prob(alpha: f64, beta: f64, depth: usize) -> f64 {
    alpha.ln() - beta * (1.0 + depth as f64).ln()
}

/// `log(1 - P_split(d))`.
pub fn log_stop_prob(alpha: f64, beta: f64, depth: usize) -> f64 {
    (-log_split_prob(alpha, beta, depth).exp()).ln_1p()
}

/// Log prior probability of a tree's structure given the training rows.
///
/// Terminals contribute `log(1 - P_split)`; internal nodes contribute
/// `log P_split - log p_adj - log n_adj`, where `p_adj` counts variables with
/// a candidate split value at the node and `n_adj` counts candidate values of
/// the chosen variable. A terminal with no candidate split at all cannot
/// grow and contributes zero. Trees whose rules are not candidates for their
/// rows have prior probability zero.
pub fn log_tree_prior(tree: &Tree, alpha: f64, beta: f64, dataset: &Dataset) -> f64 {
    if !is_admissible(tree, dataset) {
        return f64::NEG_INFINITY;
    }
    let rows = node_rows(tree, dataset);
    let mut total = 0.0;
    for (id, node) in tree.nodes().iter().enumerate() {
        let node_rows = &rows[id];
        let depth = node.depth();
        match node.rule() {
            None => {
                if !splittable_vars(dataset, node_rows).is_empty() {
                    total += log_stop_prob(alpha, beta, depth);
                }
            }
            Some((var, _)) => {
                let p_adj = splittable_vars(dataset, node_rows).len();
                let n_adj = count_cutpoints(dataset, node_rows, var);
                if p_adj == 0 || n_adj == 0 {
                    return f64::NEG_INFINITY;
                }
                total += log_split_prob(alpha, beta, depth)
                    - (p_adj as f64).ln()
                    - (n_adj as f64).ln();
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree_ops::cutpoints::cutpoints_for_rows;

    fn dataset(xs: &[f64]) -> Dataset {
        let y: Vec<f64> = (0..xs.len()).map(|i| i as f64 * 0.5 + 1.0).collect();
        Dataset::from_raw(vec!["x".into()], vec![xs.to_vec()], "y", &y, &vec!["g"; xs.len()])
            .unwrap()
    }

    #[test]
    fn stump_prior() {
        let d = dataset(&[0.0, 1.0, 2.0]);
        let lp = log_tree_prior(&Tree::stump(), 0.95, 2.0, &d);
        assert!((lp - 0.05f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_split_prior() {
        // 11 distinct values: 10 cutpoints at the root; each child keeps
        // at least two distinct values so both may split further.
        let xs: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let d = dataset(&xs);
        let mut tree = Tree::stump();
        tree.grow(0, 0, 5.0);
        let expected = 0.95f64.ln() - 1f64.ln() - 10f64.ln() + 2.0 * (1.0 - 0.95 / 4.0f64).ln();
        let lp = log_tree_prior(&tree, 0.95, 2.0, &d);
        assert!((lp - expected).abs() < 1e-12, "{lp} vs {expected}");
    }

    #[test]
    fn growth_prior_probe() {
        // 1 variable, 10 cutpoints: stump = log 0.05; grown = log(0.95/10)
        // + 2 log(1 - 0.95/4), which is the larger of the two.
        let xs: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let d = dataset(&xs);
        let stump = log_tree_prior(&Tree::stump(), 0.95, 2.0, &d);
        let mut grown = Tree::stump();
        grown.grow(0, 0, 5.0);
        let grown = log_tree_prior(&grown, 0.95, 2.0, &d);
        assert!((stump - (-2.995732273553991)).abs() < 1e-12);
        assert!((grown - (-2.8961839283827375)).abs() < 1e-12);
        // With alpha small relative to 1/(number of cutpoints) the same
        // growth is penalized instead.
        let stump = log_tree_prior(&Tree::stump(), 0.04, 2.0, &d);
        let mut tree = Tree::stump();
        tree.grow(0, 0, 5.0);
        let grown = log_tree_prior(&tree, 0.04, 2.0, &d);
        assert!((stump - (-0.040821994520255166)).abs() < 1e-12);
        assert!((grown - (-5.541561589569249)).abs() < 1e-12);
        assert!(grown < stump);
    }

    /// Every tree reachable by repeated splitting on candidate values,
    /// enumerated exhaustively.
    fn enumerate(d: &Dataset, tree: Tree, frontier: Vec<usize>, out: &mut Vec<Tree>) {
        let Some((&leaf, rest)) = frontier.split_first() else {
            out.push(tree);
            return;
        };
        let rows = &node_rows(&tree, d)[leaf];
        // leave `leaf` terminal
        enumerate(d, tree.clone(), rest.to_vec(), out);
        for var in 0..d.n_covariates() {
            for cut in cutpoints_for_rows(d, rows, var) {
                let mut t = tree.clone();
                let (l, r) = t.grow(leaf, var, cut);
                let mut next = rest.to_vec();
                next.extend([l, r]);
                enumerate(d, t, next, out);
            }
        }
    }

    #[test]
    fn prior_normalizes_over_enumerated_space() {
        // 1 covariate with 3 cutpoints.
        let d = dataset(&[0.1, 0.2, 0.2, 0.3, 0.4]);
        let mut trees = Vec::new();
        enumerate(&d, Tree::stump(), vec![0], &mut trees);
        let total: f64 = trees
            .iter()
            .map(|t| log_tree_prior(t, 0.95, 2.0, &d).exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-6, "total {total}");

        // two covariates, three and two cutpoints
        let a = vec![0.1, 0.2, 0.3, 0.4, 0.4];
        let b = vec![1.0, 1.0, 2.0, 3.0, 2.0];
        let y = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let d2 = Dataset::from_raw(vec!["a".into(), "b".into()], vec![a, b], "y", &y, &["g"; 5])
            .unwrap();
        let mut trees = Vec::new();
        enumerate(&d2, Tree::stump(), vec![0], &mut trees);
        for &(alpha, beta) in &[(0.95, 2.0), (0.5, 0.5), (0.2, 1.0)] {
            let total: f64 = trees
                .iter()
                .map(|t| log_tree_prior(t, alpha, beta, &d2).exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-6, "alpha {alpha}: total {total}");
        }
    }

    #[test]
    fn inadmissible_tree_has_zero_prior() {
        let d = dataset(&[0.1, 0.2, 0.3]);
        let mut tree = Tree::stump();
        tree.grow(0, 0, 0.1);
        assert_eq!(log_tree_prior(&tree, 0.95, 2.0, &d), f64::NEG_INFINITY);
    }
}
