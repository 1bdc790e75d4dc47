//! GROW / PRUNE / CHANGE / SWAP proposals with exact proposal-ratio
//! bookkeeping.

use rand::Rng;

use crate::config::MoveProbs;
use crate::data::Dataset;
use crate::distributions::{sample_multinomial_index, uniform_index};
use crate::tree::{NodeId, Tree};

use super::cutpoints::{count_cutpoints, cutpoints_for_rows, is_admissible, node_rows, splittable_vars};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Grow,
    Prune,
    Change,
    Swap,
}

impl MoveKind {
    pub const ALL: [MoveKind; 4] = [MoveKind::Grow, MoveKind::Prune, MoveKind::Change, MoveKind::Swap];

    fn log_prob(self, probs: &MoveProbs) -> f64 {
        let p = match self {
            MoveKind::Grow => probs.grow,
            MoveKind::Prune => probs.prune,
            MoveKind::Change => probs.change,
            MoveKind::Swap => probs.swap,
        };
        (p / probs.total()).ln()
    }
}

#[derive(Clone, Debug)]
pub struct MoveProposal {
    pub kind: MoveKind,
    pub new_tree: Tree,
    /// `log q(T | T*) - log q(T* | T)`.
    pub log_proposal_ratio: f64,
}

#[derive(Clone, Debug)]
pub enum Proposal {
    Move(MoveProposal),
    /// The drawn move cannot be applied to this tree; treat as rejected.
    NoOp(MoveKind),
}

impl Proposal {
    pub fn kind(&self) -> MoveKind {
        match self {
            Proposal::Move(m) => m.kind,
            Proposal::NoOp(k) => *k,
        }
    }
}

/// Draw a move kind, then apply it.
pub fn propose<R: Rng + ?Sized>(
    tree: &Tree,
    dataset: &Dataset,
    probs: &MoveProbs,
    rng: &mut R,
) -> Proposal {
    let kind = MoveKind::ALL[sample_multinomial_index(&probs.as_array(), rng)
        .expect("move probabilities validated")];
    propose_kind(kind, tree, dataset, probs, rng)
}

pub fn propose_kind<R: Rng + ?Sized>(
    kind: MoveKind,
    tree: &Tree,
    dataset: &Dataset,
    probs: &MoveProbs,
    rng: &mut R,
) -> Proposal {
    let proposal = match kind {
        MoveKind::Grow => grow(tree, dataset, probs, rng),
        MoveKind::Prune => prune(tree, dataset, probs, rng),
        MoveKind::Change => change(tree, dataset, rng),
        MoveKind::Swap => swap(tree, dataset, rng),
    };
    match proposal {
        Some((new_tree, log_proposal_ratio)) => Proposal::Move(MoveProposal {
            kind,
            new_tree,
            log_proposal_ratio,
        }),
        None => Proposal::NoOp(kind),
    }
}

/// Terminals with at least one candidate split.
fn growable(tree: &Tree, dataset: &Dataset, rows: &[Vec<usize>]) -> Vec<NodeId> {
    tree.terminals()
        .into_iter()
        .filter(|&t| !splittable_vars(dataset, &rows[t]).is_empty())
        .collect()
}

/// `log q` of growing `leaf` with `var` in `tree`, excluding the kind term.
fn log_grow_choice(tree: &Tree, dataset: &Dataset, leaf: NodeId, var: usize) -> f64 {
    let rows = node_rows(tree, dataset);
    let n_growable = growable(tree, dataset, &rows).len();
    let p_adj = splittable_vars(dataset, &rows[leaf]).len();
    let n_adj = count_cutpoints(dataset, &rows[leaf], var);
    -((n_growable * p_adj * n_adj) as f64).ln()
}

fn grow<R: Rng + ?Sized>(
    tree: &Tree,
    dataset: &Dataset,
    probs: &MoveProbs,
    rng: &mut R,
) -> Option<(Tree, f64)> {
    let rows = node_rows(tree, dataset);
    let candidates = growable(tree, dataset, &rows);
    if candidates.is_empty() {
        return None;
    }
    let leaf = candidates[uniform_index(candidates.len(), rng)];
    let vars = splittable_vars(dataset, &rows[leaf]);
    let var = vars[uniform_index(vars.len(), rng)];
    let cuts = cutpoints_for_rows(dataset, &rows[leaf], var);
    let value = cuts[uniform_index(cuts.len(), rng)];

    let mut new_tree = tree.clone();
    new_tree.grow(leaf, var, value);

    let forward = MoveKind::Grow.log_prob(probs)
        - ((candidates.len() * vars.len() * cuts.len()) as f64).ln();
    let reverse = MoveKind::Prune.log_prob(probs)
        - (new_tree.parents_of_terminals().len() as f64).ln();
    Some((new_tree, reverse - forward))
}

fn prune<R: Rng + ?Sized>(
    tree: &Tree,
    dataset: &Dataset,
    probs: &MoveProbs,
    rng: &mut R,
) -> Option<(Tree, f64)> {
    let candidates = tree.parents_of_terminals();
    if candidates.is_empty() {
        return None;
    }
    let node = candidates[uniform_index(candidates.len(), rng)];
    let (var, _) = tree.node(node).rule().unwrap();
    let mut new_tree = tree.clone();
    let map = new_tree.prune(node);
    let leaf = map[node].unwrap();

    let forward = MoveKind::Prune.log_prob(probs) - (candidates.len() as f64).ln();
    let reverse = MoveKind::Grow.log_prob(probs) + log_grow_choice(&new_tree, dataset, leaf, var);
    Some((new_tree, reverse - forward))
}

/// Redraw the rule of a parent of two terminals. The candidate set and the
/// node's rows are unchanged, so only the per-variable cutpoint counts can
/// make the ratio non-zero.
fn change<R: Rng + ?Sized>(tree: &Tree, dataset: &Dataset, rng: &mut R) -> Option<(Tree, f64)> {
    let candidates = tree.parents_of_terminals();
    if candidates.is_empty() {
        return None;
    }
    let node = candidates[uniform_index(candidates.len(), rng)];
    let (old_var, _) = tree.node(node).rule().unwrap();
    let rows = &node_rows(tree, dataset)[node];
    let vars = splittable_vars(dataset, rows);
    if vars.is_empty() {
        return None;
    }
    let var = vars[uniform_index(vars.len(), rng)];
    let cuts = cutpoints_for_rows(dataset, rows, var);
    let value = cuts[uniform_index(cuts.len(), rng)];
    let mut new_tree = tree.clone();
    new_tree.set_rule(node, var, value);

    let old_count = count_cutpoints(dataset, rows, old_var);
    if old_count == 0 {
        return None;
    }
    Some((new_tree, (cuts.len() as f64).ln() - (old_count as f64).ln()))
}

/// Exchange the rules of an internal parent and one internal child.
fn swap<R: Rng + ?Sized>(tree: &Tree, dataset: &Dataset, rng: &mut R) -> Option<(Tree, f64)> {
    let pairs = tree.internal_pairs();
    if pairs.is_empty() {
        return None;
    }
    let (parent, child) = pairs[uniform_index(pairs.len(), rng)];
    let (pv, px) = tree.node(parent).rule().unwrap();
    let (cv, cx) = tree.node(child).rule().unwrap();
    if (pv, px) == (cv, cx) {
        return None;
    }
    let mut new_tree = tree.clone();
    new_tree.set_rule(parent, cv, cx);
    new_tree.set_rule(child, pv, px);
    if !is_admissible(&new_tree, dataset) {
        return None;
    }
    Some((new_tree, 0.0))
}
