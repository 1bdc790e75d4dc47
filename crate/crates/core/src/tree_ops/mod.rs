//! Tree prior and the Metropolis proposal moves.

mod cutpoints;
mod moves;
mod prior;

pub use cutpoints::{
    available_cutpoints, count_cutpoints, cutpoints_for_rows, is_admissible, node_rows,
    splittable_vars,
};
pub use moves::{propose, propose_kind, MoveKind, MoveProposal, Proposal};
pub use prior::{log_split_prob, log_stop_prob, log_tree_prior};
