//! Tree-factored Sinkhorn iterations.
//!
//! The j-th marginal of the unnormalized plan `K ⊙ u` factorizes as
//!
//! ```text
//! Pⱼ(K ⊙ u) = uⱼ ⊙ ⨀_{l ∈ Nⱼ} α_{(j,l)}
//! ```
//!
//! with messages computed recursively from the leaves,
//! `α_{(j,k)} = K^{(j,k)}(u_k ⊙ ⨀_{l ∈ N_k∖{j}} α_{(k,l)})` (empty product
//! is all-ones).  A sweep walks the tree once in pre-order: on entering a
//! node it refreshes the message arriving from its parent and rescales the
//! node's potential; on leaving a subtree it refreshes the message flowing
//! back to the parent.  This interleaving keeps every message consistent
//! with the newest potentials at the moment it is read, so each update is
//! an exact coordinate maximization of the dual, while still spending only
//! 2(N−1) kernel applications per sweep.

use super::objective::dual_from_scalings;
use super::{Diagnostics, ScalingState, SolverConfig, SweepRecord, TreeProblem};
use crate::tree::TraversalPlan;
use crate::{Error, Result};
use ndarray::{Array1, Array2};

/// Verifies that the message `α_{(receiver, sender)}` was computed after
/// every potential and message it depends on, recursively over the subtree
/// behind `sender`.
fn ensure_message_current(
    problem: &TreeProblem,
    state: &ScalingState,
    receiver: usize,
    sender: usize,
) -> Result<()> {
    let tree = problem.tree();
    let edge = tree
        .edge_between(receiver, sender)
        .ok_or_else(|| Error::InvalidInput(format!("({receiver}, {sender}) is not an edge")))?;
    let slot = ScalingState::message_slot(edge, receiver < sender);
    let version = state.msg_version[slot];
    let stale = || Error::StaleMessage { from: receiver, to: sender };
    if version < state.u_version[sender] {
        return Err(stale());
    }
    for &(l, dep_edge) in tree.neighbors(sender) {
        if l == receiver {
            continue;
        }
        let dep_slot = ScalingState::message_slot(dep_edge, sender < l);
        if version < state.msg_version[dep_slot] {
            return Err(stale());
        }
        ensure_message_current(problem, state, sender, l)?;
    }
    Ok(())
}

/// Product of the current messages arriving at `j`, skipping `exclude`.
fn neighbor_product(
    problem: &TreeProblem,
    state: &ScalingState,
    j: usize,
    exclude: Option<usize>,
) -> Result<Array1<f64>> {
    let mut prod = Array1::ones(problem.support_size(j));
    for &(l, edge) in problem.tree().neighbors(j) {
        if Some(l) == exclude {
            continue;
        }
        ensure_message_current(problem, state, j, l)?;
        prod *= state.message(ScalingState::message_slot(edge, j < l));
    }
    Ok(prod)
}

/// Recomputes the directed message `α_{(receiver, sender)}` from the
/// sender's potential and its other incoming messages, and stores it.
pub fn update_alpha(
    problem: &TreeProblem,
    state: &mut ScalingState,
    receiver: usize,
    sender: usize,
) -> Result<()> {
    let tree = problem.tree();
    let edge = tree
        .edge_between(receiver, sender)
        .ok_or_else(|| Error::InvalidInput(format!("({receiver}, {sender}) is not an edge")))?;
    let mut packet = neighbor_product(problem, state, sender, Some(receiver))?;
    packet *= state.u(sender);
    let kernel = problem.kernel(edge);
    let transpose = receiver > sender;
    let message = kernel.apply(packet.view(), transpose)?;
    for &m in &message {
        if !m.is_finite() {
            return Err(Error::Numerical(format!(
                "message ({receiver}, {sender}) overflowed at sweep {}",
                state.sweeps
            )));
        }
        if m == 0.0 {
            return Err(Error::Numerical(format!(
                "message ({receiver}, {sender}) underflowed to zero at sweep {}; \
                 a larger epsilon keeps the kernels away from zero",
                state.sweeps
            )));
        }
    }
    state.set_message(ScalingState::message_slot(edge, receiver < sender), message);
    state.kernel_applications += 1;
    Ok(())
}

/// Projection of `K ⊙ u` onto the j-th marginal, `uⱼ ⊙ ⨀ α_{(j,l)}`.
pub fn node_marginal(
    problem: &TreeProblem,
    state: &ScalingState,
    j: usize,
) -> Result<Array1<f64>> {
    let mut m = neighbor_product(problem, state, j, None)?;
    m *= state.u(j);
    Ok(m)
}

/// Applies the rescale `r ↦ exp(−aprox(−ε·ln r)/ε)` to the ratio of target
/// weights over the message product, returning the new scaling vector.
fn rescaled_potential(
    problem: &TreeProblem,
    state: &ScalingState,
    j: usize,
    prod: &Array1<f64>,
) -> Result<Array1<f64>> {
    let penalty = problem.penalty(j);
    let eps = problem.epsilon();
    let mu = problem.node(j).measure.weights();
    let mut new_u = Array1::zeros(prod.len());
    for k in 0..prod.len() {
        let r = mu[k] / prod[k];
        let v = penalty.scaling_update(eps, r);
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Numerical(format!(
                "potential update at node {j} produced {v} (ratio {r}) at sweep {}",
                state.sweeps
            )));
        }
        new_u[k] = v;
    }
    Ok(new_u)
}

/// One coordinate update: replaces `uⱼ` by the Sinkhorn mapping of the
/// current state.  Messages at neighboring nodes become stale until they
/// are recomputed.
pub fn sinkhorn_update(problem: &TreeProblem, state: &mut ScalingState, j: usize) -> Result<()> {
    let prod = neighbor_product(problem, state, j, None)?;
    let new_u = rescaled_potential(problem, state, j, &prod)?;
    state.set_u(j, new_u);
    Ok(())
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Enter(usize),
    Exit(usize),
}

/// The sweep engine: owns the iterate and walks the tree in pre-order,
/// refreshing messages as described in the module docs.
pub struct TreeSweeper<'a> {
    problem: &'a TreeProblem,
    plan: TraversalPlan,
    events: Vec<Event>,
    state: ScalingState,
}

impl<'a> TreeSweeper<'a> {
    /// Initializes `u ≡ 1` and the leaf-to-root messages, rooting the
    /// traversal at the lowest-index free node (or node 0).
    pub fn new(problem: &'a TreeProblem) -> Result<Self> {
        Self::with_root(problem, problem.tree().default_root())
    }

    pub fn with_root(problem: &'a TreeProblem, root: usize) -> Result<Self> {
        let plan = problem.tree().preorder(root)?;
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); problem.node_count()];
        for &j in plan.order() {
            if let Some(p) = plan.parent(j) {
                children[p].push(j);
            }
        }
        // Neighbors are listed ascending, so children inherit that order
        // from the pre-order visit sequence.
        let mut events = Vec::with_capacity(2 * problem.node_count());
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        events.push(Event::Enter(root));
        while let Some(top) = stack.last_mut() {
            let (j, next) = *top;
            if next < children[j].len() {
                top.1 += 1;
                let c = children[j][next];
                events.push(Event::Enter(c));
                stack.push((c, 0));
            } else {
                events.push(Event::Exit(j));
                stack.pop();
            }
        }

        let mut state = ScalingState::fresh(problem);
        // Upward messages, deepest nodes first.
        for j in plan.reversed() {
            if let Some(p) = plan.parent(j) {
                update_alpha(problem, &mut state, p, j)?;
            }
        }
        Ok(Self { problem, plan, events, state })
    }

    pub fn state(&self) -> &ScalingState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut ScalingState {
        &mut self.state
    }

    pub fn into_state(self) -> ScalingState {
        self.state
    }

    /// Node update order within a sweep (the pre-order list).
    pub fn order(&self) -> &[usize] {
        self.plan.order()
    }

    /// One full sweep; returns the max over nodes of the relative change
    /// ‖uⱼ⁺ − uⱼ‖∞ / ‖uⱼ‖∞.
    pub fn sweep(&mut self) -> Result<f64> {
        self.sweep_with(|_, _| {})
    }

    /// Like [`TreeSweeper::sweep`], invoking the hook after every
    /// coordinate update (used to record per-update dual values).
    pub fn sweep_with(&mut self, mut on_update: impl FnMut(usize, &ScalingState)) -> Result<f64> {
        let mut max_change = 0.0f64;
        for idx in 0..self.events.len() {
            match self.events[idx] {
                Event::Enter(j) => {
                    if let Some(p) = self.plan.parent(j) {
                        update_alpha(self.problem, &mut self.state, j, p)?;
                    }
                    let prod = neighbor_product(self.problem, &self.state, j, None)?;
                    let new_u = rescaled_potential(self.problem, &self.state, j, &prod)?;
                    let old_u = self.state.u(j);
                    let num = new_u
                        .iter()
                        .zip(old_u.iter())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    let den = old_u.iter().map(|x| x.abs()).fold(0.0, f64::max);
                    max_change = max_change.max(num / den);
                    self.state.set_u(j, new_u);
                    on_update(j, &self.state);
                }
                Event::Exit(j) => {
                    if let Some(p) = self.plan.parent(j) {
                        update_alpha(self.problem, &mut self.state, p, j)?;
                    }
                }
            }
        }
        self.state.sweeps += 1;
        Ok(max_change)
    }

    /// Refreshes the parent-to-child messages top-down so every stored
    /// message is consistent with the final potentials.  Run once after the
    /// sweep loop, before extracting marginals.
    pub fn refresh_messages(&mut self) -> Result<()> {
        for i in 0..self.plan.order().len() {
            let j = self.plan.order()[i];
            if let Some(p) = self.plan.parent(j) {
                update_alpha(self.problem, &mut self.state, j, p)?;
            }
        }
        Ok(())
    }

    /// Recomputes every message from the current potentials: child-to-parent
    /// bottom-up, then parent-to-child top-down.  Costs 2(N−1) kernel
    /// applications; needed after poking potentials directly.
    pub fn refresh_all_messages(&mut self) -> Result<()> {
        for j in self.plan.reversed() {
            if let Some(p) = self.plan.parent(j) {
                update_alpha(self.problem, &mut self.state, p, j)?;
            }
        }
        self.refresh_messages()
    }
}

/// Runs the full iteration: initialize, sweep until the relative potential
/// change drops below the tolerance or the sweep cap is hit, then refresh
/// all messages.  Non-convergence is reported in the diagnostics, not as an
/// error.
pub fn tree_sinkhorn(
    problem: &TreeProblem,
    config: &SolverConfig,
) -> Result<(ScalingState, Diagnostics)> {
    config.check()?;
    let mut sweeper = TreeSweeper::new(problem)?;
    let mut records = Vec::new();
    let mut converged = false;
    let mut last_change = f64::INFINITY;
    let mut sweeps_run = 0;
    for sweep in 1..=config.max_sweeps {
        last_change = sweeper.sweep()?;
        sweeps_run = sweep;
        if config.dual_cadence > 0 && sweep % config.dual_cadence == 0 {
            let dual = dual_from_scalings(problem, &sweeper.state.u)?;
            sweeper.state.last_dual = Some(dual);
            records.push(SweepRecord {
                sweep,
                dual_value: dual,
                max_u_change: last_change,
                kernel_applications: sweeper.state.kernel_applications,
            });
        }
        if last_change < config.tolerance {
            converged = true;
            break;
        }
    }
    sweeper.refresh_messages()?;
    let final_dual = dual_from_scalings(problem, &sweeper.state.u)?;
    if records.last().map(|r| r.sweep) != Some(sweeps_run) {
        records.push(SweepRecord {
            sweep: sweeps_run,
            dual_value: final_dual,
            max_u_change: last_change,
            kernel_applications: sweeper.state.kernel_applications,
        });
    }
    let mut state = sweeper.into_state();
    state.last_dual = Some(final_dual);
    state.converged = converged;
    let diagnostics = Diagnostics {
        dual_monotone: Diagnostics::monotone(&records),
        records,
        sweeps: sweeps_run,
        converged,
        final_dual,
        final_max_u_change: last_change,
    };
    Ok((state, diagnostics))
}

/// Node factor `u_v ⊙ ⨀_{l ∈ N_v ∖ excluded} α_{(v,l)}` used by pair
/// marginal contraction.
fn node_factor(
    problem: &TreeProblem,
    state: &ScalingState,
    v: usize,
    excluded: &[usize],
) -> Result<Array1<f64>> {
    let mut f = state.u(v).clone();
    for &(l, edge) in problem.tree().neighbors(v) {
        if excluded.contains(&l) {
            continue;
        }
        ensure_message_current(problem, state, v, l)?;
        f *= state.message(ScalingState::message_slot(edge, v < l));
    }
    Ok(f)
}

/// Dense kernel of the edge joining `from` and `to`, oriented so rows index
/// `from`'s support.
fn oriented_dense_kernel(problem: &TreeProblem, from: usize, to: usize) -> Result<Array2<f64>> {
    let edge = problem
        .tree()
        .edge_between(from, to)
        .ok_or_else(|| Error::InvalidInput(format!("({from}, {to}) is not an edge")))?;
    let k = problem.kernel(edge).to_dense();
    Ok(if from < to { k } else { k.t().to_owned() })
}

/// Pair marginal of the implicit plan over nodes `j` and `k`, computed by
/// contracting along the unique tree path between them.  For an edge `(j,k)`
/// this is `diag(βⱼ) K^{(j,k)} diag(β_k)` with the usual one-sided message
/// products; for longer paths the kernels and inner node factors are
/// interleaved.
pub fn edge_marginal(
    problem: &TreeProblem,
    state: &ScalingState,
    j: usize,
    k: usize,
) -> Result<Array2<f64>> {
    if j == k {
        return Err(Error::InvalidInput("pair marginal needs two distinct nodes".into()));
    }
    let path = problem.tree().path_between(j, k)?;
    let q = path.len() - 1;
    let right = node_factor(problem, state, path[q], &[path[q - 1]])?;

    // Start from the right end: kernel of the last edge with its columns
    // scaled by the terminal factor.
    let mut cur = oriented_dense_kernel(problem, path[q - 1], path[q])?;
    for (mut col, &s) in cur.columns_mut().into_iter().zip(right.iter()) {
        col *= s;
    }

    for i in (0..q - 1).rev() {
        let mid = node_factor(problem, state, path[i + 1], &[path[i], path[i + 2]])?;
        for (mut row, &s) in cur.rows_mut().into_iter().zip(mid.iter()) {
            row *= s;
        }
        let edge = problem
            .tree()
            .edge_between(path[i], path[i + 1])
            .expect("consecutive path nodes are adjacent");
        let kernel = problem.kernel(edge);
        let transpose = path[i] > path[i + 1];
        let mut next = Array2::zeros((problem.support_size(path[i]), cur.ncols()));
        for (c, col) in cur.columns().into_iter().enumerate() {
            let out = kernel.apply(col, transpose)?;
            next.column_mut(c).assign(&out);
        }
        cur = next;
    }

    let left = node_factor(problem, state, path[0], &[path[1]])?;
    for (mut row, &s) in cur.rows_mut().into_iter().zip(left.iter()) {
        row *= s;
    }
    Ok(cur)
}

/// A view of the implicit tree-factored transport plan.
pub struct FactoredPlan<'a> {
    problem: &'a TreeProblem,
    state: &'a ScalingState,
}

impl<'a> FactoredPlan<'a> {
    pub fn new(problem: &'a TreeProblem, state: &'a ScalingState) -> Self {
        Self { problem, state }
    }

    pub fn node_marginal(&self, j: usize) -> Result<Array1<f64>> {
        node_marginal(self.problem, self.state, j)
    }

    pub fn pair_marginal(&self, j: usize, k: usize) -> Result<Array2<f64>> {
        edge_marginal(self.problem, self.state, j, k)
    }

    /// Materializes the dense plan (guarded by `cap`).
    pub fn densify(&self, cap: usize) -> Result<super::DensePlan> {
        super::recover_plan_dense(self.problem, self.state, cap)
    }

    pub fn total_mass(&self) -> Result<f64> {
        let root = self.problem.tree().default_root();
        Ok(self.node_marginal(root)?.sum())
    }
}
