//! Sinkhorn scaling iterations for unbalanced multi-marginal transport.
//!
//! Two implementations of the same dual ascent:
//!
//! - [`engine`]: the tree-factored form.  Potentials live per node as
//!   exp-domain scaling vectors `uᵢ = exp(fᵢ/ε)`; partial contractions of
//!   the plan are propagated along directed edges as α-messages, so one
//!   full sweep over all nodes costs exactly 2(N−1) kernel applications.
//! - [`dense`]: a brute-force N-way tensor form working on log potentials
//!   with max-shifted log-sum-exp.  It is the oracle the tree path is
//!   verified against and the only path that can materialize plans.
//!
//! Both update coordinate j by the same rule: apply the (c,ε)-transform,
//! then the penalty's anisotropic proximity operator,
//! `fⱼ ← −aprox(−f^{(c,ε,j)})`.  Every such update is an exact coordinate
//! maximization of the dual functional, so recorded dual values are
//! non-decreasing along any trajectory.

pub mod dense;
pub mod engine;
mod objective;
mod state;


pub use dense::{primal_objective, recover_plan_dense, DensePlan, DenseSolver};
pub use engine::{
    edge_marginal, node_marginal, sinkhorn_update, tree_sinkhorn, update_alpha, FactoredPlan,
    TreeSweeper,
};
pub use objective::dual_objective;
pub use state::ScalingState;

use crate::kernels::{CostMatrix, GibbsKernel};
use crate::measures::{DiscreteMeasure, MarginalPenalty, DEFAULT_WEIGHT_FLOOR};
use crate::tree::TreeGraph;
use crate::{Error, Result};

/// Default cap on the dense tensor size (number of entries).
pub const DEFAULT_DENSE_CAP: usize = 10_000_000;

/// One node of a [`TreeProblem`]: a support with target weights and the
/// marginal penalty tied to it.  Nodes with a [`MarginalPenalty::Free`]
/// penalty only contribute their support; the weights are ignored.
#[derive(Debug, Clone)]
pub struct ProblemNode {
    pub measure: DiscreteMeasure,
    pub penalty: MarginalPenalty,
}

impl ProblemNode {
    pub fn new(measure: DiscreteMeasure, penalty: MarginalPenalty) -> Self {
        Self { measure, penalty }
    }

    pub fn free(support: DiscreteMeasure) -> Self {
        Self { measure: support, penalty: MarginalPenalty::Free }
    }
}

/// A full UMOT instance with tree-structured cost: the tree, per-node
/// measures and penalties, per-edge Gibbs kernels built from `tₑ·cₑ`, and
/// the regularization ε.  Reference measures are counting measures on the
/// node supports.
#[derive(Debug, Clone)]
pub struct TreeProblem {
    tree: TreeGraph,
    nodes: Vec<ProblemNode>,
    costs: Vec<CostMatrix>,
    kernels: Vec<GibbsKernel>,
    epsilon: f64,
}

impl TreeProblem {
    /// Validates and assembles an instance.  `costs[e]` is the unweighted
    /// cost for edge `e` oriented as stored in the tree (rows = lower node).
    pub fn new(
        tree: TreeGraph,
        nodes: Vec<ProblemNode>,
        costs: Vec<CostMatrix>,
        epsilon: f64,
    ) -> Result<Self> {
        Self::with_weight_floor(tree, nodes, costs, epsilon, DEFAULT_WEIGHT_FLOOR)
    }

    /// Like [`TreeProblem::new`] with an explicit full-support floor for
    /// Equality/KL marginals.
    pub fn with_weight_floor(
        tree: TreeGraph,
        nodes: Vec<ProblemNode>,
        costs: Vec<CostMatrix>,
        epsilon: f64,
        weight_floor: f64,
    ) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidInput(format!("epsilon {epsilon} must be positive")));
        }
        if nodes.len() != tree.node_count() {
            return Err(Error::LengthMismatch(nodes.len(), tree.node_count()));
        }
        if costs.len() != tree.edges().len() {
            return Err(Error::LengthMismatch(costs.len(), tree.edges().len()));
        }
        for (e, (&(a, b), cost)) in tree.edges().iter().zip(&costs).enumerate() {
            if cost.nrows() != nodes[a].measure.len() || cost.ncols() != nodes[b].measure.len() {
                return Err(Error::InvalidInput(format!(
                    "edge {e} cost is {}x{} but node supports are {} and {}",
                    cost.nrows(),
                    cost.ncols(),
                    nodes[a].measure.len(),
                    nodes[b].measure.len()
                )));
            }
        }
        for (j, node) in nodes.iter().enumerate() {
            if node.penalty.needs_full_support() {
                let min = node.measure.min_weight();
                if min < weight_floor {
                    return Err(Error::ZeroWeight {
                        node: j,
                        weight: min,
                        floor: weight_floor,
                        penalty: node.penalty.kind_name(),
                    });
                }
            }
        }

        // Existence condition: Σᵢ φᵢ'∞ + inf c > 0.  The cost infimum is
        // bounded below by the sum of per-edge minima, which is exact enough
        // to reject the degenerate all-free zero-cost configuration.
        let recession_sum: f64 = nodes.iter().map(|n| n.penalty.recession()).sum();
        if recession_sum.is_finite() {
            let cost_lb: f64 = tree
                .edges()
                .iter()
                .zip(&costs)
                .enumerate()
                .map(|(e, (_, c))| tree.edge_weight(e) * c.min_entry_lower_bound())
                .sum();
            if recession_sum + cost_lb <= 0.0 {
                return Err(Error::InvalidInput(
                    "no finite solution: penalties have zero total recession and the cost \
                     can vanish (all-free marginals with zero cost)"
                        .into(),
                ));
            }
        }

        let kernels = tree
            .edges()
            .iter()
            .zip(&costs)
            .enumerate()
            .map(|(e, (_, c))| GibbsKernel::new(c, tree.edge_weight(e), epsilon))
            .collect::<Result<Vec<_>>>()?;

        Ok(Self { tree, nodes, costs, kernels, epsilon })
    }

    pub fn tree(&self) -> &TreeGraph {
        &self.tree
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, j: usize) -> &ProblemNode {
        &self.nodes[j]
    }

    pub fn support_size(&self, j: usize) -> usize {
        self.nodes[j].measure.len()
    }

    pub fn support_sizes(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.measure.len()).collect()
    }

    pub fn penalty(&self, j: usize) -> &MarginalPenalty {
        &self.nodes[j].penalty
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn kernel(&self, edge: usize) -> &GibbsKernel {
        &self.kernels[edge]
    }

    pub fn cost(&self, edge: usize) -> &CostMatrix {
        &self.costs[edge]
    }

    /// Total mass of the product reference measure, `Π mᵢ`.  This is the
    /// constant dropped when the dual is evaluated without its `−1` summand.
    pub fn reference_product_mass(&self) -> f64 {
        self.nodes.iter().map(|n| n.measure.len() as f64).product()
    }

    /// Number of entries a dense plan would need.
    pub fn dense_len(&self) -> Option<usize> {
        self.nodes
            .iter()
            .try_fold(1usize, |acc, n| acc.checked_mul(n.measure.len()))
    }
}

/// How the dense path evaluates its updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DenseDomain {
    /// Log potentials with max-shifted log-sum-exp (robust for small ε).
    #[default]
    Log,
    /// Exp-domain scaling vectors with direct tensor contractions.
    Exp,
}

/// Stopping and instrumentation knobs for the solvers.  ε is part of the
/// problem, not the config, since the kernels are built from it.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Hard cap on full sweeps.
    pub max_sweeps: usize,
    /// Stop when the max over nodes of ‖uⱼ⁺ − uⱼ‖∞/‖uⱼ‖∞ drops below this.
    pub tolerance: f64,
    /// Record the dual value every this many sweeps (0 = only at the end).
    pub dual_cadence: usize,
    /// Dense-path evaluation domain.
    pub dense_domain: DenseDomain,
    /// Dense tensor entry cap.
    pub dense_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 5000,
            tolerance: 1e-8,
            dual_cadence: 10,
            dense_domain: DenseDomain::Log,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

impl SolverConfig {
    pub(crate) fn check(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::InvalidInput("max_sweeps must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerance {} must be positive",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// One diagnostics sample, taken at the end of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    pub dual_value: f64,
    pub max_u_change: f64,
    /// Cumulative kernel applications consumed by the iteration so far.
    pub kernel_applications: u64,
}

/// Run summary returned next to the final [`ScalingState`].
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub records: Vec<SweepRecord>,
    pub sweeps: usize,
    pub converged: bool,
    pub final_dual: f64,
    pub final_max_u_change: f64,
    /// True when the recorded dual values never decreased (1e-10 slack).
    pub dual_monotone: bool,
}

impl Diagnostics {
    pub(crate) fn monotone(records: &[SweepRecord]) -> bool {
        records
            .windows(2)
            .all(|w| w[1].dual_value >= w[0].dual_value - 1e-10)
    }
}
