use crate::data::Dataset;
use crate::tree::{NodeId, Tree};

/// Training rows reaching every node (internal nodes included), indexed by
/// node id.
pub fn node_rows(tree: &Tree, dataset: &Dataset) -> Vec<Vec<usize>> {
    let mut rows = vec![Vec::new(); tree.len()];
    for i in 0..dataset.n_rows() {
        let mut id = tree.root();
        loop {
            rows[id].push(i);
            match tree.node(id).rule() {
                None => break,
                Some((var, value)) => {
                    let (l, r) = tree.node(id).children().unwrap();
                    id = if dataset.value(i, var) < value { l } else { r };
                }
            }
        }
    }
    rows
}

fn sorted_distinct_ranks(dataset: &Dataset, rows: &[usize], var: usize) -> Vec<u32> {
    let mut ranks: Vec<u32> = rows.iter().map(|&i| dataset.rank(i, var)).collect();
    ranks.sort_unstable();
    ranks.dedup();
    ranks
}

/// Candidate split values of `var` for a node holding `rows`: the distinct
/// observed values except the smallest, since splitting at the minimum would
/// leave the left child empty under the `<` rule. Sorted ascending.
pub fn cutpoints_for_rows(dataset: &Dataset, rows: &[usize], var: usize) -> Vec<f64> {
    let uniques = dataset.unique_values(var);
    sorted_distinct_ranks(dataset, rows, var)
        .into_iter()
        .skip(1)
        .map(|r| uniques[r as usize])
        .collect()
}

pub fn count_cutpoints(dataset: &Dataset, rows: &[usize], var: usize) -> usize {
    sorted_distinct_ranks(dataset, rows, var).len().saturating_sub(1)
}

/// Variables with at least one candidate split value for `rows`.
pub fn splittable_vars(dataset: &Dataset, rows: &[usize]) -> Vec<usize> {
    (0..dataset.n_covariates())
        .filter(|&v| count_cutpoints(dataset, rows, v) > 0)
        .collect()
}

/// Candidate split values of `var` at `node` of `tree`.
pub fn available_cutpoints(dataset: &Dataset, tree: &Tree, node: NodeId, var: usize) -> Vec<f64> {
    let rows = &node_rows(tree, dataset)[node];
    cutpoints_for_rows(dataset, rows, var)
}

/// True when every internal node's rule is one of its candidate split
/// values, which in turn means no node is empty.
pub fn is_admissible(tree: &Tree, dataset: &Dataset) -> bool {
    let rows = node_rows(tree, dataset);
    tree.internals().into_iter().all(|id| {
        let (var, value) = tree.node(id).rule().unwrap();
        let node_rows = &rows[id];
        node_rows.iter().any(|&i| dataset.value(i, var) == value)
            && node_rows.iter().any(|&i| dataset.value(i, var) < value)
    })
}
