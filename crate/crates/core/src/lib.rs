//! Entropy-regularized unbalanced multi-marginal optimal transport (UMOT)
//! on discrete measures.
//!
//! The library solves
//!
//! ```text
//! inf_π  ⟨c, π⟩ + ε·KL(π, γ^⊗) + Σᵢ D_φᵢ(πᵢ, μᵢ)
//! ```
//!
//! over non-negative measures π on a product of finite supports, where the
//! marginal penalties D_φᵢ are φ-divergences (hard equality, free, KL or TV)
//! and the reference measures γᵢ are counting measures.  When the cost
//! decouples along the edges of a tree, `c = Σₑ tₑ·cₑ`, the Sinkhorn
//! iterations for the dual problem reduce to matrix-vector products with
//! per-edge Gibbs kernels and can be organized as message passing on the
//! tree: one full sweep costs 2(N−1) kernel applications.
//!
//! Modules:
//! - [`measures`]: discrete measures, φ-divergences, anisotropic proximity
//!   operators, CSV/PGM input and output.
//! - [`kernels`]: cost matrices and Gibbs kernels `K = exp(−t·c/ε)`, dense or
//!   separable over 2D grids.
//! - [`tree`]: tree graphs over marginal indices and the pre-order traversal
//!   used by the sweep schedule.
//! - [`solver`]: the scaling iterations themselves, both the tree-factored
//!   message-passing form and a dense N-way tensor form used as a
//!   brute-force oracle, plus objectives, plans and marginal extraction.
//! - [`problems`]: barycenters via the star tree, tree interpolation,
//!   star-shaped decompositions and OT-based transfer operators.

pub mod kernels;
pub mod measures;
pub mod problems;
pub mod solver;
pub mod tree;

use thiserror::Error;

/// Errors produced by measure construction, problem validation and solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid tree: {}", format_violations(.0))]
    InvalidTree(Vec<TreeViolation>),

    #[error("node {node}: weight {weight} below floor {floor} not allowed under a {penalty} penalty")]
    ZeroWeight {
        node: usize,
        weight: f64,
        floor: f64,
        penalty: &'static str,
    },

    #[error("dense representation needs {required} entries, over the cap of {cap}")]
    DenseCapExceeded { required: usize, cap: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("stale message on directed edge ({from}, {to}); refresh messages before reading marginals")]
    StaleMessage { from: usize, to: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

/// A single violated tree invariant, reported by graph validation.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeViolation {
    EdgeCount { nodes: usize, edges: usize },
    SelfLoop(usize),
    DuplicateEdge(usize, usize),
    NodeOutOfRange(usize),
    Cycle,
    Disconnected,
    WeightSum(f64),
    NonPositiveWeight { edge: (usize, usize), weight: f64 },
    GivenNodeNotLeaf { node: usize, degree: usize },
}

impl std::fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TreeViolation::EdgeCount { nodes, edges } => {
                write!(f, "{edges} edges for {nodes} nodes (a tree needs n-1)")
            }
            TreeViolation::SelfLoop(n) => write!(f, "self-loop at node {n}"),
            TreeViolation::DuplicateEdge(a, b) => write!(f, "duplicate edge ({a}, {b})"),
            TreeViolation::NodeOutOfRange(n) => write!(f, "node index {n} out of range"),
            TreeViolation::Cycle => write!(f, "cycle detected"),
            TreeViolation::Disconnected => write!(f, "graph is not connected"),
            TreeViolation::WeightSum(s) => write!(f, "edge weights sum to {s}, expected 1"),
            TreeViolation::NonPositiveWeight { edge, weight } => {
                write!(f, "edge ({}, {}) has non-positive weight {weight}", edge.0, edge.1)
            }
            TreeViolation::GivenNodeNotLeaf { node, degree } => {
                write!(f, "given node {node} has degree {degree}, must be a leaf")
            }
        }
    }
}

fn format_violations(v: &[TreeViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    /// True when the error reports a numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::StaleMessage { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub use kernels::{CostMatrix, GibbsKernel};
pub use measures::{DiscreteMeasure, MarginalPenalty};
pub use solver::{DensePlan, Diagnostics, ScalingState, SolverConfig, TreeProblem};
pub use tree::{TraversalPlan, TreeGraph};
