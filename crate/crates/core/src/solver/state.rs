//! The solver iterate: per-node scaling vectors and per-directed-edge
//! messages, with version counters that catch reads of stale messages.

use super::TreeProblem;
use ndarray::Array1;

/// Exp-domain iterate of the tree solver.
///
/// `u[j] = exp(f[j]/ε)` is the scaling vector of node j.  For a stored edge
/// `e = (a, b)`, the directed message `α_{(a,b)}` (node a receiving from b)
/// sits at slot `2e`, and `α_{(b,a)}` at `2e + 1`.  Every write bumps a
/// global tick; a message is current only if its tick is at least as new as
/// everything it was computed from, which marginal extraction verifies
/// recursively.
#[derive(Debug, Clone)]
pub struct ScalingState {
    pub(super) u: Vec<Array1<f64>>,
    pub(super) alpha: Vec<Array1<f64>>,
    pub(super) u_version: Vec<u64>,
    pub(super) msg_version: Vec<u64>,
    pub(super) tick: u64,
    pub(super) sweeps: usize,
    pub(super) kernel_applications: u64,
    pub(super) last_dual: Option<f64>,
    pub(super) converged: bool,
}

impl ScalingState {
    /// Fresh state: all scaling vectors one, no messages computed yet.
    pub fn fresh(problem: &TreeProblem) -> Self {
        let n = problem.node_count();
        let mut tick = 0;
        let u: Vec<Array1<f64>> =
            (0..n).map(|j| Array1::ones(problem.support_size(j))).collect();
        let u_version: Vec<u64> = (0..n)
            .map(|_| {
                tick += 1;
                tick
            })
            .collect();
        let alpha = problem
            .tree()
            .edges()
            .iter()
            .flat_map(|&(a, b)| {
                [
                    Array1::ones(problem.support_size(a)),
                    Array1::ones(problem.support_size(b)),
                ]
            })
            .collect();
        let msg_version = vec![0; 2 * problem.tree().edges().len()];
        Self {
            u,
            alpha,
            u_version,
            msg_version,
            tick,
            sweeps: 0,
            kernel_applications: 0,
            last_dual: None,
            converged: false,
        }
    }

    /// Scaling vector of node `j`.
    pub fn u(&self, j: usize) -> &Array1<f64> {
        &self.u[j]
    }

    /// Log potentials `fⱼ = ε·ln uⱼ`.
    pub fn log_potentials(&self, epsilon: f64) -> Vec<Array1<f64>> {
        self.u.iter().map(|u| u.mapv(|x| epsilon * x.ln())).collect()
    }

    /// Directed message received by `a` along stored edge `e = (a, b)` when
    /// `receiver_is_lower`, else the one received by `b`.
    pub(super) fn message_slot(edge: usize, receiver_is_lower: bool) -> usize {
        2 * edge + usize::from(!receiver_is_lower)
    }

    pub(super) fn message(&self, slot: usize) -> &Array1<f64> {
        &self.alpha[slot]
    }

    pub(super) fn set_u(&mut self, j: usize, value: Array1<f64>) {
        self.tick += 1;
        self.u_version[j] = self.tick;
        self.u[j] = value;
    }

    pub(super) fn set_message(&mut self, slot: usize, value: Array1<f64>) {
        self.tick += 1;
        self.msg_version[slot] = self.tick;
        self.alpha[slot] = value;
    }

    /// Pretends the potential of node `j` changed without refreshing any
    /// message, so every message depending on it becomes stale.  Used by
    /// validation suites to exercise the stale-message guard.
    pub fn mark_potential_dirty(&mut self, j: usize) {
        self.tick += 1;
        self.u_version[j] = self.tick;
    }

    /// Sweeps completed so far.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Kernel applications consumed by message initialization, sweeps and
    /// the final message refresh (diagnostic evaluations are not counted).
    pub fn kernel_applications(&self) -> u64 {
        self.kernel_applications
    }

    /// Most recent dual value recorded by the driver, if any.
    pub fn last_dual(&self) -> Option<f64> {
        self.last_dual
    }

    /// True when the last run stopped on the tolerance rather than the
    /// sweep cap.
    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Largest scaling-vector entry, a cheap overflow sentinel.
    pub fn max_u(&self) -> f64 {
        self.u
            .iter()
            .flat_map(|u| u.iter().copied())
            .fold(0.0, f64::max)
    }
}
