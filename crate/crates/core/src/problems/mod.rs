//! Problem builders and post-processing on top of the tree solver:
//! barycenters through the star-tree construction, interpolation along
//! general trees, multiple star-shaped decompositions, and transfer
//! operators for time-series propagation.
//!
//! The barycenter of measures μ₁..μ_N with coordinates t in the open
//! simplex is the free center marginal of the (N+1)-node star problem with
//! edge costs tᵢ·cᵢ and leaf penalties tᵢ·φᵢ.  The same value can be
//! reached from the other side by pinning a candidate ξ and summing N
//! two-marginal solves:
//!
//! ```text
//! Σᵢ tᵢ·UOT_{ε/tᵢ}(μᵢ, ξ̂) − ε(N−1)·E(ξ̂)  =  UMOT value,
//! ```
//!
//! where values are duals without their constant `−1` summand and
//! `E(ξ) = Σ ξᵏ ln ξᵏ − ξ(Y)` is the negative entropy relative to counting.

mod transfer;

pub use transfer::TransferOperator;

use crate::kernels::CostMatrix;
use crate::measures::{neg_entropy, DiscreteMeasure, MarginalPenalty};
use crate::solver::{
    dual_objective, node_marginal, tree_sinkhorn, DenseDomain, DenseSolver, Diagnostics,
    ProblemNode, ScalingState, SolverConfig, TreeProblem,
};
use crate::tree::TreeGraph;
use crate::{Error, Result};
use ndarray::Array1;

/// Slack for the simplex-sum check on barycentric coordinates.
const SIMPLEX_TOL: f64 = 1e-9;

/// Builds the star UMOT problem whose free center marginal is the
/// barycenter of `measures` with coordinates `t` (open simplex: every
/// tᵢ > 0).  Leaf i connects to the center with edge weight tᵢ, cost
/// `‖x−y‖²` between its support and `bary_support`, and penalty tᵢ·φᵢ.
pub fn build_barycenter_problem(
    measures: &[DiscreteMeasure],
    penalties: &[MarginalPenalty],
    t: &[f64],
    bary_support: &DiscreteMeasure,
    epsilon: f64,
) -> Result<TreeProblem> {
    let n = measures.len();
    if n == 0 {
        return Err(Error::InvalidInput("barycenter needs at least one input measure".into()));
    }
    if penalties.len() != n {
        return Err(Error::LengthMismatch(penalties.len(), n));
    }
    if t.len() != n {
        return Err(Error::LengthMismatch(t.len(), n));
    }
    let sum: f64 = t.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL || t.iter().any(|&ti| !(ti > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "barycentric coordinates {t:?} must be strictly positive and sum to 1"
        )));
    }

    let center = n;
    let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, center)).collect();
    let given: Vec<usize> = (0..n).collect();
    let tree = TreeGraph::validate(n + 1, &edges, t, &given)?;

    let mut nodes = Vec::with_capacity(n + 1);
    let mut costs = Vec::with_capacity(n);
    for i in 0..n {
        nodes.push(ProblemNode::new(measures[i].clone(), penalties[i].scaled(t[i])?));
        costs.push(CostMatrix::squared_distance(&measures[i], bary_support)?);
    }
    nodes.push(ProblemNode::free(bary_support.clone()));

    TreeProblem::new(tree, nodes, costs, epsilon)
}

/// The center-node marginal of a converged star problem, as a measure on
/// the barycenter support.  The problem must have exactly one free node.
pub fn extract_barycenter(problem: &TreeProblem, state: &ScalingState) -> Result<DiscreteMeasure> {
    let mut free = problem.tree().free_nodes();
    let center = free
        .next()
        .ok_or_else(|| Error::InvalidInput("problem has no free node to extract".into()))?;
    if free.next().is_some() {
        return Err(Error::InvalidInput("problem has more than one free node".into()));
    }
    let weights = node_marginal(problem, state, center)?;
    problem.node(center).measure.with_weights(weights)
}

/// Result of a pinned two-marginal solve `UOT_{ε'}(μ, ξ)` with the second
/// marginal held fixed by an Equality penalty.
#[derive(Debug, Clone)]
pub struct PinnedUot {
    /// Dual value (without the constant `−1` summand).
    pub value: f64,
    /// Optimal log potential on the pinned side, the gradient of the value
    /// with respect to ξ.
    pub pinned_potential: Array1<f64>,
    pub converged: bool,
    pub sweeps: usize,
    /// Both optimal log potentials, reusable as a warm start.
    pub potentials: Vec<Array1<f64>>,
}

/// Solves the two-marginal problem with cost `c`, penalty φ on the μ side
/// and the ξ marginal pinned exactly, at regularization `epsilon`.
///
/// Runs on the dense log-domain path: pinned targets can carry weights
/// across hundreds of orders of magnitude (Gaussian tails, mirror-descent
/// iterates), which overflows exp-domain scaling vectors but stays O(1) in
/// the potentials.
pub fn pinned_uot(
    mu: &DiscreteMeasure,
    penalty: &MarginalPenalty,
    xi: &DiscreteMeasure,
    cost: &CostMatrix,
    epsilon: f64,
    config: &SolverConfig,
) -> Result<PinnedUot> {
    pinned_uot_warm(mu, penalty, xi, cost, epsilon, config, None)
}

/// [`pinned_uot`] with optional initial potentials, for callers solving a
/// sequence of nearby pinned problems.
pub fn pinned_uot_warm(
    mu: &DiscreteMeasure,
    penalty: &MarginalPenalty,
    xi: &DiscreteMeasure,
    cost: &CostMatrix,
    epsilon: f64,
    config: &SolverConfig,
    warm: Option<&[Array1<f64>]>,
) -> Result<PinnedUot> {
    let tree = TreeGraph::validate(2, &[(0, 1)], &[1.0], &[0, 1])?;
    let nodes = vec![
        ProblemNode::new(mu.clone(), *penalty),
        ProblemNode::new(xi.clone(), MarginalPenalty::Equality),
    ];
    let problem = TreeProblem::new(tree, nodes, vec![cost.clone()], epsilon)?;
    let mut solver = DenseSolver::new(&problem, config.dense_cap, DenseDomain::Log)?;
    if let Some(f) = warm {
        solver.set_potentials(f.to_vec())?;
    }
    let (sweeps, converged) = solver.run(&[0, 1], config.max_sweeps, config.tolerance);
    let value = dual_objective(&problem, solver.potentials())?;
    let pinned_potential = solver.potentials()[1].clone();
    Ok(PinnedUot { value, pinned_potential, converged, sweeps, potentials: solver.potentials().to_vec() })
}

/// Evaluates `Σᵢ tᵢ·UOT_{ε/tᵢ}(μᵢ, ξ) − ε(N−1)·E(ξ)` by N pinned solves;
/// the cost of leg i is the squared distance between the i-th support and
/// the support of ξ.
pub fn barycenter_sum_value(
    measures: &[DiscreteMeasure],
    penalties: &[MarginalPenalty],
    t: &[f64],
    xi: &DiscreteMeasure,
    epsilon: f64,
    config: &SolverConfig,
) -> Result<f64> {
    let n = measures.len();
    if penalties.len() != n || t.len() != n {
        return Err(Error::LengthMismatch(penalties.len().min(t.len()), n));
    }
    let mut total = 0.0;
    for i in 0..n {
        let cost = CostMatrix::squared_distance(&measures[i], xi)?;
        let solve = pinned_uot(&measures[i], &penalties[i], xi, &cost, epsilon / t[i], config)?;
        total += t[i] * solve.value;
    }
    Ok(total - epsilon * (n as f64 - 1.0) * neg_entropy(xi.weights()))
}

/// Controls for the outer minimization in [`coupled_barycenter`].
#[derive(Debug, Clone)]
pub struct CoupledConfig {
    pub max_outer: usize,
    /// Stop when the projected gradient ‖Σ tᵢ·ĝᵢ‖∞ drops below this
    /// (entries pinned at the floor with positive gradient do not count).
    pub gradient_tolerance: f64,
    /// Lower box bound on ξ, relative to the uniform initial level.  The
    /// multiplicative updates would otherwise drive tail entries of ξ into
    /// the denormal range and overflow the pinned solves; entries this far
    /// down contribute nothing to any objective term.
    pub relative_floor: f64,
}

impl Default for CoupledConfig {
    fn default() -> Self {
        // The attainable gradient floor is set by the inner solves; values
        // below ~1e-7 drown in their stopping noise.
        Self { max_outer: 400, gradient_tolerance: 1e-7, relative_floor: 1e-40 }
    }
}

/// The classical coupled barycenter `argmin_ξ Σᵢ tᵢ·UOT_{ε/tᵢ}(μᵢ, ξ)`,
/// without the −ε(N−1)E(ξ) sharpening term.
#[derive(Debug, Clone)]
pub struct CoupledBarycenter {
    pub xi: DiscreteMeasure,
    /// Final objective Σ tᵢ·Vᵢ(ξ) (dual-valued, no constant summand).
    pub value: f64,
    pub gradient_norm: f64,
    pub outer_iterations: usize,
    pub converged: bool,
}

/// Minimizes the coupled objective by mirror descent on the positive
/// orthant: ξ ← ξ ⊙ exp(−step·Σ tᵢ·ĝᵢ/ε), where ĝᵢ is the pinned-side
/// potential of leg i (the gradient of its value in ξ).  The step starts at
/// 1/N and backtracks when the objective fails to decrease.
pub fn coupled_barycenter(
    measures: &[DiscreteMeasure],
    penalties: &[MarginalPenalty],
    t: &[f64],
    support: &DiscreteMeasure,
    epsilon: f64,
    inner: &SolverConfig,
    outer: &CoupledConfig,
) -> Result<CoupledBarycenter> {
    let n = measures.len();
    if n == 0 || penalties.len() != n || t.len() != n {
        return Err(Error::InvalidInput("coupled barycenter needs parallel inputs".into()));
    }
    let costs: Vec<CostMatrix> = measures
        .iter()
        .map(|m| CostMatrix::squared_distance(m, support))
        .collect::<Result<Vec<_>>>()?;

    let m = support.len();
    let init_mass: f64 = measures.iter().zip(t).map(|(mu, &ti)| ti * mu.total_mass()).sum();
    let init_level = init_mass / m as f64;
    let floor = outer.relative_floor * init_level;
    let mut xi = Array1::from_elem(m, init_level);

    // Consecutive candidates are close, so each leg warm-starts from its
    // previous potentials.
    let mut warm: Vec<Option<Vec<Array1<f64>>>> = vec![None; n];
    let mut evaluate = |xi: &Array1<f64>,
                        warm: &mut Vec<Option<Vec<Array1<f64>>>>|
     -> Result<(f64, Array1<f64>)> {
        let xi_measure = support.with_weights(xi.clone())?;
        let mut value = 0.0;
        let mut grad = Array1::zeros(m);
        for i in 0..n {
            let solve = pinned_uot_warm(
                &measures[i],
                &penalties[i],
                &xi_measure,
                &costs[i],
                epsilon / t[i],
                inner,
                warm[i].as_deref(),
            )?;
            value += t[i] * solve.value;
            grad.scaled_add(t[i], &solve.pinned_potential);
            warm[i] = Some(solve.potentials);
        }
        Ok((value, grad))
    };

    // Stationarity measure on the box {ξ ≥ floor}: gradients pushing a
    // floored entry further down are inactive.
    let projected_norm = |xi: &Array1<f64>, grad: &Array1<f64>| -> f64 {
        xi.iter()
            .zip(grad.iter())
            .map(|(&x, &g)| if x <= floor * 1.0001 && g > 0.0 { 0.0 } else { g.abs() })
            .fold(0.0, f64::max)
    };

    // Natural (Newton-like) step is g/(N·ε), but the log-move per entry is
    // trust-regioned: an uncapped step at small ε can crash ξ by dozens of
    // orders of magnitude at once and blow up the next pinned solve.
    const MAX_LOG_STEP: f64 = 3.0;

    let (mut value, mut grad) = evaluate(&xi, &mut warm)?;
    let mut converged = false;
    let mut iterations = 0;
    let base_step = 1.0 / n as f64;
    // The backtracked step carries over between iterations (doubled as a
    // fresh attempt) so one halving cascade is not repaid every time.
    let mut step = base_step;
    for _ in 0..outer.max_outer {
        iterations += 1;
        if projected_norm(&xi, &grad) < outer.gradient_tolerance {
            converged = true;
            break;
        }
        step = (step * 2.0).min(base_step);
        loop {
            let candidate: Array1<f64> = xi
                .iter()
                .zip(grad.iter())
                .map(|(&x, &g)| {
                    let d = (-step * g / epsilon).clamp(-MAX_LOG_STEP, MAX_LOG_STEP);
                    (x * d.exp()).max(floor)
                })
                .collect();
            // A failing or non-improving candidate just halves the step.
            match evaluate(&candidate, &mut warm) {
                Ok((cand_value, cand_grad)) if cand_value < value => {
                    xi = candidate;
                    value = cand_value;
                    grad = cand_grad;
                    break;
                }
                _ => {
                    step *= 0.5;
                    if step < 1e-8 * base_step {
                        // No improvement at resolvable step sizes.
                        converged = true;
                        break;
                    }
                }
            }
        }
        if converged {
            break;
        }
    }
    let gradient_norm = projected_norm(&xi, &grad);
    Ok(CoupledBarycenter {
        xi: support.with_weights(xi)?,
        value,
        gradient_norm,
        outer_iterations: iterations,
        converged,
    })
}

/// Builds the interpolation UMOT instance on a general tree: given nodes
/// keep their measures with penalties scaled by the weight of their unique
/// edge, free nodes get no penalty, and every edge cost is the squared
/// distance between the adjacent supports.
pub fn build_interpolation_problem(
    tree: &TreeGraph,
    node_measures: &[DiscreteMeasure],
    penalties: &[MarginalPenalty],
    epsilon: f64,
) -> Result<TreeProblem> {
    let n = tree.node_count();
    if node_measures.len() != n {
        return Err(Error::LengthMismatch(node_measures.len(), n));
    }
    if penalties.len() != n {
        return Err(Error::LengthMismatch(penalties.len(), n));
    }
    let mut nodes = Vec::with_capacity(n);
    for j in 0..n {
        if tree.is_given(j) {
            let t_v = tree
                .leaf_weight(j)
                .ok_or_else(|| Error::InvalidInput(format!("given node {j} is not a leaf")))?;
            nodes.push(ProblemNode::new(node_measures[j].clone(), penalties[j].scaled(t_v)?));
        } else {
            nodes.push(ProblemNode::free(node_measures[j].clone()));
        }
    }
    let costs = tree
        .edges()
        .iter()
        .map(|&(a, b)| CostMatrix::squared_distance(&node_measures[a], &node_measures[b]))
        .collect::<Result<Vec<_>>>()?;
    TreeProblem::new(tree.clone(), nodes, costs, epsilon)
}

/// Solves the interpolation problem and returns the marginals at all free
/// nodes, together with the state and diagnostics of the run.
pub fn interpolate_tree(
    tree: &TreeGraph,
    node_measures: &[DiscreteMeasure],
    penalties: &[MarginalPenalty],
    epsilon: f64,
    config: &SolverConfig,
) -> Result<(Vec<(usize, DiscreteMeasure)>, ScalingState, Diagnostics)> {
    let problem = build_interpolation_problem(tree, node_measures, penalties, epsilon)?;
    let (state, diagnostics) = tree_sinkhorn(&problem, config)?;
    let mut inner = Vec::new();
    for u in tree.free_nodes() {
        let weights = node_marginal(&problem, &state, u)?;
        inner.push((u, node_measures[u].with_weights(weights)?));
    }
    Ok((inner, state, diagnostics))
}

/// Path-resistance weights of the star decomposition around `center`:
/// `q_k = 1/Σ_{e ∈ [center,k]} t_e`, normalized over the given leaves (in
/// ascending node order).
pub fn star_decomposition_weights(tree: &TreeGraph, center: usize) -> Result<Vec<f64>> {
    if tree.is_given(center) {
        return Err(Error::InvalidInput(format!("node {center} is not an inner free node")));
    }
    let leaves: Vec<usize> = tree.given_nodes().collect();
    if leaves.is_empty() {
        return Err(Error::InvalidInput("tree has no given nodes".into()));
    }
    let mut q = Vec::with_capacity(leaves.len());
    for &k in &leaves {
        let path = tree.path_between(center, k)?;
        let mut t_sum = 0.0;
        for pair in path.windows(2) {
            let e = tree
                .edge_between(pair[0], pair[1])
                .expect("consecutive path nodes are adjacent");
            t_sum += tree.edge_weight(e);
        }
        q.push(1.0 / t_sum);
    }
    let total: f64 = q.iter().sum();
    Ok(q.into_iter().map(|v| v / total).collect())
}

/// Approximates one free marginal of a tree problem by a star problem
/// centered at `center`: the given measures become the star's leaves with
/// their base penalties and barycentric weights from
/// [`star_decomposition_weights`].  All node spaces must coincide.
pub fn star_decomposition(
    tree: &TreeGraph,
    center: usize,
    node_measures: &[DiscreteMeasure],
    penalties: &[MarginalPenalty],
    epsilon: f64,
) -> Result<(TreeProblem, Vec<f64>)> {
    let n = tree.node_count();
    if node_measures.len() != n || penalties.len() != n {
        return Err(Error::LengthMismatch(node_measures.len().min(penalties.len()), n));
    }
    let reference = &node_measures[center];
    for m in node_measures {
        if m.points() != reference.points() {
            return Err(Error::InvalidInput(
                "star decomposition needs identical supports at every node".into(),
            ));
        }
    }
    let weights = star_decomposition_weights(tree, center)?;
    let leaves: Vec<usize> = tree.given_nodes().collect();
    let leaf_measures: Vec<DiscreteMeasure> =
        leaves.iter().map(|&k| node_measures[k].clone()).collect();
    let leaf_penalties: Vec<MarginalPenalty> = leaves.iter().map(|&k| penalties[k]).collect();
    let problem =
        build_barycenter_problem(&leaf_measures, &leaf_penalties, &weights, reference, epsilon)?;
    Ok((problem, weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::MarginalPenalty as MP;

    fn gaussian_1d(m: usize, mean: f64, sigma: f64, mass: f64) -> DiscreteMeasure {
        let xs: Vec<f64> = (0..m).map(|i| i as f64 / (m as f64 - 1.0)).collect();
        let mut ws: Vec<f64> =
            xs.iter().map(|&x| (-((x - mean) / sigma).powi(2) / 2.0).exp()).collect();
        let sum: f64 = ws.iter().sum();
        for w in &mut ws {
            *w *= mass / sum;
        }
        DiscreteMeasure::from_points_1d(&xs, &ws).unwrap()
    }

    #[test]
    fn barycenter_problem_is_star_with_free_center() {
        let a = gaussian_1d(8, 0.3, 0.1, 1.0);
        let b = gaussian_1d(8, 0.7, 0.1, 1.0);
        let y = DiscreteMeasure::support_only(a.points().clone()).unwrap();
        let p = build_barycenter_problem(
            &[a, b],
            &[MP::kl(1.0).unwrap(), MP::kl(1.0).unwrap()],
            &[0.5, 0.5],
            &y,
            0.1,
        )
        .unwrap();
        assert_eq!(p.node_count(), 3);
        assert_eq!(p.tree().degree(2), 2);
        assert_eq!(*p.penalty(2), MP::Free);
        assert_eq!(*p.penalty(0), MP::Kl { weight: 0.5 });
    }

    #[test]
    fn boundary_simplex_rejected() {
        let a = gaussian_1d(4, 0.3, 0.1, 1.0);
        let b = gaussian_1d(4, 0.7, 0.1, 1.0);
        let y = DiscreteMeasure::support_only(a.points().clone()).unwrap();
        let r = build_barycenter_problem(
            &[a, b],
            &[MP::Equality, MP::Equality],
            &[1.0, 0.0],
            &y,
            0.1,
        );
        assert!(r.is_err());
    }

    #[test]
    fn single_point_barycenter_keeps_mass() {
        let one = DiscreteMeasure::from_points_1d(&[0.5], &[1.0]).unwrap();
        let y = DiscreteMeasure::from_points_1d(&[0.5], &[1.0]).unwrap();
        let p = build_barycenter_problem(
            &[one.clone(), one.clone()],
            &[MP::Equality, MP::Equality],
            &[0.5, 0.5],
            &y,
            0.5,
        )
        .unwrap();
        let (state, diag) = tree_sinkhorn(&p, &SolverConfig::default()).unwrap();
        assert!(diag.converged);
        let bary = extract_barycenter(&p, &state).unwrap();
        assert_eq!(bary.len(), 1);
        assert!((bary.total_mass() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn h_tree_star_weights_match_path_resistance() {
        // H-shaped tree with equal edge weights 1/6; inner nodes 1, 3, 5.
        let edges = [(0, 1), (1, 2), (1, 3), (3, 5), (4, 5), (5, 6)];
        let t = TreeGraph::validate(7, &edges, &[1.0 / 6.0; 6], &[0, 2, 4, 6]).unwrap();

        let w = star_decomposition_weights(&t, 1).unwrap();
        let expect = [3.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0, 1.0 / 8.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{w:?}");
        }

        let w = star_decomposition_weights(&t, 3).unwrap();
        for a in &w {
            assert!((a - 0.25).abs() < 1e-12, "{w:?}");
        }

        let w = star_decomposition_weights(&t, 5).unwrap();
        let expect = [1.0 / 8.0, 1.0 / 8.0, 3.0 / 8.0, 3.0 / 8.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{w:?}");
        }
    }

    #[test]
    fn star_input_reproduces_normalized_weights() {
        // A star with equal weights decomposes into itself.
        let edges = [(0, 4), (1, 4), (2, 4), (3, 4)];
        let t = TreeGraph::validate(5, &edges, &[0.25; 4], &[0, 1, 2, 3]).unwrap();
        let w = star_decomposition_weights(&t, 4).unwrap();
        for a in &w {
            assert!((a - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn line_interpolation_is_symmetric() {
        // Identical mirror-symmetric leaves and symmetric costs: the middle
        // marginal inherits the mirror symmetry at the fixed point.
        let halves = gaussian_1d(10, 0.3, 0.12, 0.5);
        let mirrored = gaussian_1d(10, 0.7, 0.12, 0.5);
        let leaf = halves
            .with_weights(halves.weights() + mirrored.weights())
            .unwrap();
        let support = DiscreteMeasure::support_only(leaf.points().clone()).unwrap();
        let tree =
            TreeGraph::validate(3, &[(0, 1), (1, 2)], &[0.5, 0.5], &[0, 2]).unwrap();
        let measures = [leaf.clone(), support, leaf.clone()];
        let penalties = [MP::kl(1.0).unwrap(), MP::Free, MP::kl(1.0).unwrap()];
        let config = SolverConfig { tolerance: 1e-12, ..Default::default() };
        let (inner, _, diag) =
            interpolate_tree(&tree, &measures, &penalties, 0.05, &config).unwrap();
        assert!(diag.converged);
        assert_eq!(inner.len(), 1);
        let w = inner[0].1.weights();
        let m = w.len();
        for k in 0..m {
            assert!(
                (w[k] - w[m - 1 - k]).abs() < 1e-9,
                "asymmetry at {k}: {} vs {}",
                w[k],
                w[m - 1 - k]
            );
        }
    }

    #[test]
    fn coupled_barycenter_gradient_vanishes() {
        let a = gaussian_1d(9, 0.3, 0.12, 1.0);
        let b = gaussian_1d(9, 0.7, 0.12, 1.0);
        let y = DiscreteMeasure::support_only(a.points().clone()).unwrap();
        let penalties = [MP::kl(1.0).unwrap(), MP::kl(1.0).unwrap()];
        let inner = SolverConfig { tolerance: 1e-12, max_sweeps: 20_000, ..Default::default() };
        let outer = CoupledConfig { max_outer: 300, gradient_tolerance: 1e-7 };
        let result =
            coupled_barycenter(&[a.clone(), b.clone()], &penalties, &[0.5, 0.5], &y, 0.05, &inner, &outer)
                .unwrap();
        assert!(result.converged, "gradient norm {}", result.gradient_norm);
        assert!(result.gradient_norm < 2e-6, "gradient norm {}", result.gradient_norm);

        // First-order check: the objective cannot be improved by nudging ξ.
        let xi = result.xi.weights().clone();
        for delta in [1e-3, -1e-3] {
            let mut bumped = xi.clone();
            bumped[2] *= 1.0 + delta;
            let v = (0..2)
                .map(|i| {
                    let cost = CostMatrix::squared_distance([&a, &b][i], &y).unwrap();
                    let xi_m = y.with_weights(bumped.clone()).unwrap();
                    0.5 * pinned_uot(
                        [&a, &b][i],
                        &penalties[i],
                        &xi_m,
                        &cost,
                        0.05 / 0.5,
                        &inner,
                    )
                    .unwrap()
                    .value
                })
                .sum::<f64>();
            assert!(v >= result.value - 1e-8, "bump {delta} improved {} -> {v}", result.value);
        }
    }
}
