//! Arena-backed binary decision trees whose leaves carry an overall mean and
//! optional per-group means.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Internal {
        split_var: usize,
        split_value: f64,
        left: NodeId,
        right: NodeId,
        parent: Option<NodeId>,
        depth: usize,
    },
    Terminal {
        mu: f64,
        group_mus: BTreeMap<usize, f64>,
        parent: Option<NodeId>,
        depth: usize,
    },
}

impl Node {
    fn leaf(parent: Option<NodeId>, depth: usize) -> Self {
        Node::Terminal {
            mu: 0.0,
            group_mus: BTreeMap::new(),
            parent,
            depth,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Internal { depth, .. } | Node::Terminal { depth, .. } => *depth,
        }
    }

    pub fn parent(&self) -> Option<NodeId> {
        match self {
            Node::Internal { parent, .. } | Node::Terminal { parent, .. } => *parent,
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Node::Terminal { .. })
    }

    /// `(split_var, split_value)` of an internal node.
    pub fn rule(&self) -> Option<(usize, f64)> {
        match self {
            Node::Internal {
                split_var,
                split_value,
                ..
            } => Some((*split_var, *split_value)),
            Node::Terminal { .. } => None,
        }
    }

    pub fn children(&self) -> Option<(NodeId, NodeId)> {
        match self {
            Node::Internal { left, right, .. } => Some((*left, *right)),
            Node::Terminal { .. } => None,
        }
    }
}

/// Rows with `x[split_var] < split_value` go left; ties go right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
    root: NodeId,
}

impl Default for Tree {
    fn default() -> Self {
        Self::stump()
    }
}

impl Tree {
    pub fn stump() -> Self {
        Self {
            nodes: vec![Node::leaf(None, 0)],
            root: 0,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_stump(&self) -> bool {
        self.nodes[self.root].is_terminal()
    }

    pub fn terminals(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].is_terminal())
            .collect()
    }

    pub fn internals(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| !self.nodes[i].is_terminal())
            .collect()
    }

    pub fn n_terminals(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_terminal()).count()
    }

    /// Internal nodes whose two children are both terminal.
    pub fn parents_of_terminals(&self) -> Vec<NodeId> {
        self.internals()
            .into_iter()
            .filter(|&i| {
                let (l, r) = self.nodes[i].children().unwrap();
                self.nodes[l].is_terminal() && self.nodes[r].is_terminal()
            })
            .collect()
    }

    /// `(parent, child)` pairs where both are internal.
    pub fn internal_pairs(&self) -> Vec<(NodeId, NodeId)> {
        let mut pairs = Vec::new();
        for p in self.internals() {
            let (l, r) = self.nodes[p].children().unwrap();
            for c in [l, r] {
                if !self.nodes[c].is_terminal() {
                    pairs.push((p, c));
                }
            }
        }
        pairs
    }

    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(Node::depth).max().unwrap_or(0)
    }

    /// Terminal reached by a row whose covariates are given by `value(var)`.
    #[inline]
    pub fn route_by<F: Fn(usize) -> f64>(&self, value: F) -> NodeId {
        let mut id = self.root;
        loop {
            match &self.nodes[id] {
                Node::Terminal { .. } => return id,
                Node::Internal {
                    split_var,
                    split_value,
                    left,
                    right,
                    ..
                } => {
                    id = if value(*split_var) < *split_value {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn route(&self, x: &[f64]) -> NodeId {
        self.route_by(|v| x[v])
    }

    /// Leaf value for a row of `group`: the group's own mean when the leaf
    /// carries one, the overall mean otherwise.
    #[inline]
    pub fn leaf_value(&self, leaf: NodeId, group: Option<usize>) -> f64 {
        match &self.nodes[leaf] {
            Node::Terminal { mu, group_mus, .. } => group
                .and_then(|g| group_mus.get(&g).copied())
                .unwrap_or(*mu),
            Node::Internal { .. } => panic!("node {leaf} is not terminal"),
        }
    }

    pub fn set_leaf(&mut self, leaf: NodeId, mu_value: f64, groups: BTreeMap<usize, f64>) {
        match &mut self.nodes[leaf] {
            Node::Terminal { mu, group_mus, .. } => {
                *mu = mu_value;
                *group_mus = groups;
            }
            Node::Internal { .. } => panic!("node {leaf} is not terminal"),
        }
    }

    /// Split terminal `leaf`; the two new terminals are appended, so existing
    /// ids stay valid. Returns `(left, right)`.
    pub fn grow(&mut self, leaf: NodeId, split_var: usize, split_value: f64) -> (NodeId, NodeId) {
        let (parent, depth) = match &self.nodes[leaf] {
            Node::Terminal { parent, depth, .. } => (*parent, *depth),
            Node::Internal { .. } => panic!("cannot grow internal node {leaf}"),
        };
        let left = self.nodes.len();
        let right = left + 1;
        self.nodes.push(Node::leaf(Some(leaf), depth + 1));
        self.nodes.push(Node::leaf(Some(leaf), depth + 1));
        self.nodes[leaf] = Node::Internal {
            split_var,
            split_value,
            left,
            right,
            parent,
            depth,
        };
        (left, right)
    }

    /// Collapse `node` (whose children must be terminal) into a terminal.
    /// Ids are compacted; the returned map sends old ids to new ones.
    pub fn prune(&mut self, node: NodeId) -> Vec<Option<NodeId>> {
        let (parent, depth, (l, r)) = match &self.nodes[node] {
            Node::Internal {
                parent,
                depth,
                left,
                right,
                ..
            } => (*parent, *depth, (*left, *right)),
            Node::Terminal { .. } => panic!("cannot prune terminal node {node}"),
        };
        assert!(
            self.nodes[l].is_terminal() && self.nodes[r].is_terminal(),
            "prune requires terminal children"
        );
        self.nodes[node] = Node::leaf(parent, depth);
        self.compact()
    }

    /// Replace the split rule of an internal node.
    pub fn set_rule(&mut self, node: NodeId, var: usize, value: f64) {
        match &mut self.nodes[node] {
            Node::Internal {
                split_var,
                split_value,
                ..
            } => {
                *split_var = var;
                *split_value = value;
            }
            Node::Terminal { .. } => panic!("node {node} has no rule"),
        }
    }

    /// Drop nodes unreachable from the root and renumber in pre-order.
    fn compact(&mut self) -> Vec<Option<NodeId>> {
        let mut map = vec![None; self.nodes.len()];
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            map[id] = Some(order.len());
            order.push(id);
            if let Some((l, r)) = self.nodes[id].children() {
                stack.push(r);
                stack.push(l);
            }
        }
        let remap = |id: NodeId| map[id].expect("reachable");
        let nodes = order
            .iter()
            .map(|&old| match self.nodes[old].clone() {
                Node::Internal {
                    split_var,
                    split_value,
                    left,
                    right,
                    parent,
                    depth,
                } => Node::Internal {
                    split_var,
                    split_value,
                    left: remap(left),
                    right: remap(right),
                    parent: parent.map(remap),
                    depth,
                },
                Node::Terminal {
                    mu,
                    group_mus,
                    parent,
                    depth,
                } => Node::Terminal {
                    mu,
                    group_mus,
                    parent: parent.map(remap),
                    depth,
                },
            })
            .collect();
        self.nodes = nodes;
        self.root = 0;
        map
    }

    /// Structural check: one rooted binary tree with consistent parent
    /// links and depths, every node reachable, split variables `< n_vars`.
    pub fn validate(&self, n_vars: usize) -> Result<(), String> {
        if self.root >= self.nodes.len() {
            return Err("root out of range".into());
        }
        if self.nodes[self.root].parent().is_some() || self.nodes[self.root].depth() != 0 {
            return Err("root must have no parent and depth 0".into());
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id], true) {
                return Err(format!("node {id} reached twice"));
            }
            if let Node::Internal {
                split_var,
                split_value,
                left,
                right,
                depth,
                ..
            } = &self.nodes[id]
            {
                if *split_var >= n_vars {
                    return Err(format!("node {id} splits on missing variable {split_var}"));
                }
                if !split_value.is_finite() {
                    return Err(format!("node {id} has a non-finite split value"));
                }
                for c in [*left, *right] {
                    let child = self.nodes.get(c).ok_or(format!("child {c} out of range"))?;
                    if child.parent() != Some(id) {
                        return Err(format!("node {c} has wrong parent"));
                    }
                    if child.depth() != depth + 1 {
                        return Err(format!("node {c} has wrong depth"));
                    }
                    stack.push(c);
                }
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(format!("node {orphan} is unreachable"));
        }
        Ok(())
    }
}
