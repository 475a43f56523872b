//! Tree graphs over marginal indices.
//!
//! Nodes are 0-based indices `0..n`.  Edges are stored as ordered pairs
//! `(a, b)` with `a < b` and carry weights `t_e ∈ (0, 1]` summing to one.
//! The partition splits nodes into `given` (targets supplied, must be
//! leaves when used for interpolation problems) and the remaining free
//! nodes.  Traversal uses pre-order depth-first search with children
//! visited in ascending index order, which pins the sweep schedule and
//! makes iterate trajectories reproducible.

use crate::{Error, Result, TreeViolation};
use std::collections::BTreeSet;

/// Sum of the edge weights must match 1 up to this slack.
const WEIGHT_SUM_TOL: f64 = 1e-9;

/// A validated tree over marginal indices.
#[derive(Debug, Clone)]
pub struct TreeGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
    /// Per node: (neighbor, edge index) sorted by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
    given: BTreeSet<usize>,
}

impl TreeGraph {
    /// Validates and builds a tree.  `given` marks the nodes that carry
    /// target measures; each must be a leaf.  On failure, every violated
    /// invariant is reported.
    pub fn validate(
        n: usize,
        edges: &[(usize, usize)],
        weights: &[f64],
        given: &[usize],
    ) -> Result<Self> {
        let mut violations = Vec::new();
        if edges.len() != weights.len() {
            return Err(Error::LengthMismatch(edges.len(), weights.len()));
        }
        if n < 2 {
            return Err(Error::InvalidInput("a tree needs at least two nodes".into()));
        }
        if edges.len() != n - 1 {
            violations.push(TreeViolation::EdgeCount { nodes: n, edges: edges.len() });
        }

        let mut seen = BTreeSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for (&(a, b), &w) in edges.iter().zip(weights) {
            if a >= n || b >= n {
                violations.push(TreeViolation::NodeOutOfRange(a.max(b)));
                continue;
            }
            if a == b {
                violations.push(TreeViolation::SelfLoop(a));
                continue;
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                violations.push(TreeViolation::DuplicateEdge(e.0, e.1));
                continue;
            }
            if !(w > 0.0) || !w.is_finite() {
                violations.push(TreeViolation::NonPositiveWeight { edge: e, weight: w });
            }
            normalized.push((e, w));
        }

        let sum: f64 = normalized.iter().map(|&(_, w)| w).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            violations.push(TreeViolation::WeightSum(sum));
        }

        // Union-find for connectivity and acyclicity.
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut cycle = false;
        let mut components = n;
        for &((a, b), _) in &normalized {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                cycle = true;
            } else {
                parent[ra] = rb;
                components -= 1;
            }
        }
        if cycle {
            violations.push(TreeViolation::Cycle);
        }
        if components != 1 {
            violations.push(TreeViolation::Disconnected);
        }

        let mut adjacency = vec![Vec::new(); n];
        for (idx, &((a, b), _)) in normalized.iter().enumerate() {
            adjacency[a].push((b, idx));
            adjacency[b].push((a, idx));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }

        let given_set: BTreeSet<usize> = given.iter().copied().collect();
        for &g in &given_set {
            if g >= n {
                violations.push(TreeViolation::NodeOutOfRange(g));
            } else if adjacency[g].len() != 1 && !given_set.len().eq(&n) {
                // When every node is given (no free nodes) the leaf rule is
                // moot: the problem has no interpolation structure to protect.
                violations.push(TreeViolation::GivenNodeNotLeaf {
                    node: g,
                    degree: adjacency[g].len(),
                });
            }
        }

        if !violations.is_empty() {
            return Err(Error::InvalidTree(violations));
        }

        Ok(Self {
            n,
            edges: normalized.iter().map(|&(e, _)| e).collect(),
            weights: normalized.iter().map(|&(_, w)| w).collect(),
            adjacency,
            given: given_set,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edge_weight(&self, edge: usize) -> f64 {
        self.weights[edge]
    }

    /// Neighbors of `j` with their edge indices, ascending by neighbor.
    pub fn neighbors(&self, j: usize) -> &[(usize, usize)] {
        &self.adjacency[j]
    }

    pub fn degree(&self, j: usize) -> usize {
        self.adjacency[j].len()
    }

    /// Nodes carrying target measures.
    pub fn given_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.given.iter().copied()
    }

    /// Free (interpolated) nodes.
    pub fn free_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |j| !self.given.contains(j))
    }

    pub fn is_given(&self, j: usize) -> bool {
        self.given.contains(&j)
    }

    /// Edge index joining `j` and `k`, if adjacent.
    pub fn edge_between(&self, j: usize, k: usize) -> Option<usize> {
        self.adjacency
            .get(j)?
            .iter()
            .find(|&&(nb, _)| nb == k)
            .map(|&(_, e)| e)
    }

    /// Weight of the unique edge at a leaf.
    pub fn leaf_weight(&self, j: usize) -> Option<f64> {
        if self.degree(j) == 1 {
            Some(self.weights[self.adjacency[j][0].1])
        } else {
            None
        }
    }

    /// Default traversal root: the lowest-index free node when any exists,
    /// else node 0.
    pub fn default_root(&self) -> usize {
        self.free_nodes().next().unwrap_or(0)
    }

    /// Pre-order depth-first traversal from `root`, children in ascending
    /// node index.
    pub fn preorder(&self, root: usize) -> Result<TraversalPlan> {
        if root >= self.n {
            return Err(Error::InvalidInput(format!("root {root} out of range")));
        }
        let mut order = Vec::with_capacity(self.n);
        let mut parent = vec![None; self.n];
        let mut visited = vec![false; self.n];
        // Explicit stack; neighbors are pushed in reverse so the smallest
        // index is popped first.
        let mut stack = vec![root];
        visited[root] = true;
        while let Some(j) = stack.pop() {
            order.push(j);
            for &(nb, _) in self.adjacency[j].iter().rev() {
                if !visited[nb] {
                    visited[nb] = true;
                    parent[nb] = Some(j);
                    stack.push(nb);
                }
            }
        }
        debug_assert_eq!(order.len(), self.n);
        Ok(TraversalPlan { root, order, parent })
    }

    /// The unique path from `j` to `k`, endpoints included.
    pub fn path_between(&self, j: usize, k: usize) -> Result<Vec<usize>> {
        if j >= self.n || k >= self.n {
            return Err(Error::InvalidInput(format!("path endpoints ({j}, {k}) out of range")));
        }
        let plan = self.preorder(j)?;
        let mut path = vec![k];
        let mut cur = k;
        while cur != j {
            cur = plan.parent[cur].expect("tree is connected");
            path.push(cur);
        }
        path.reverse();
        Ok(path)
    }
}

/// The node ordering produced by pre-order DFS: `order` starts at the root
/// and every non-root node appears after its parent.
#[derive(Debug, Clone)]
pub struct TraversalPlan {
    root: usize,
    order: Vec<usize>,
    parent: Vec<Option<usize>>,
}

impl TraversalPlan {
    pub fn root(&self) -> usize {
        self.root
    }

    /// Nodes in visit order (the forward list).
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Visit order reversed; descendants come before ancestors.
    pub fn reversed(&self) -> impl Iterator<Item = usize> + '_ {
        self.order.iter().rev().copied()
    }

    pub fn parent(&self, j: usize) -> Option<usize> {
        self.parent[j]
    }
}
