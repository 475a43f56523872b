//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS]` line with the measured numbers (visible with `--nocapture`).
//!
//! Run with `cargo test --test acceptance -- --nocapture`.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use umot::kernels::{CostMatrix, GibbsKernel};
use umot::measures::neg_entropy;
use umot::problems::{
    barycenter_sum_value, build_barycenter_problem, coupled_barycenter, extract_barycenter,
    CoupledConfig,
};
use umot::solver::{
    dual_objective, primal_objective, recover_plan_dense, tree_sinkhorn, DenseDomain,
    DenseSolver, ProblemNode, SolverConfig, TreeProblem, TreeSweeper, DEFAULT_DENSE_CAP,
};
use umot::tree::TreeGraph;
use umot::{DiscreteMeasure, MarginalPenalty};
use umot_cli::config::ConfigFile;
use umot_cli::experiments::validate::aprox_by_golden_section;

fn random_measure(rng: &mut ChaCha8Rng, m: usize) -> DiscreteMeasure {
    let xs: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
    let ws: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..1.5)).collect();
    DiscreteMeasure::from_points_1d(&xs, &ws).unwrap()
}

fn random_penalty(rng: &mut ChaCha8Rng, allow_equality: bool) -> MarginalPenalty {
    match rng.random_range(0..4u8) {
        0 if allow_equality => MarginalPenalty::Equality,
        1 => MarginalPenalty::Free,
        _ => {
            if rng.random_bool(0.5) {
                MarginalPenalty::Kl { weight: rng.random_range(0.3..2.0) }
            } else {
                MarginalPenalty::Tv { weight: rng.random_range(0.3..2.0) }
            }
        }
    }
}

fn random_problem(
    rng: &mut ChaCha8Rng,
    n: usize,
    max_support: usize,
    allow_equality: bool,
) -> TreeProblem {
    let mut edges = Vec::new();
    for k in 1..n {
        edges.push((rng.random_range(0..k), k));
    }
    let mut weights: Vec<f64> = (0..edges.len()).map(|_| rng.random_range(0.2..1.0)).collect();
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    let given: Vec<usize> = (0..n).collect();
    let tree = TreeGraph::validate(n, &edges, &weights, &given).unwrap();
    let mut equality_used = !allow_equality;
    let nodes: Vec<ProblemNode> = (0..n)
        .map(|_| {
            let m = rng.random_range(2..=max_support);
            let penalty = random_penalty(rng, !equality_used);
            equality_used |= penalty == MarginalPenalty::Equality;
            ProblemNode::new(random_measure(rng, m), penalty)
        })
        .collect();
    let costs: Vec<CostMatrix> = tree
        .edges()
        .iter()
        .map(|&(a, b)| {
            let c = Array2::from_shape_fn(
                (nodes[a].measure.len(), nodes[b].measure.len()),
                |_| rng.random_range(0.05..1.0),
            );
            CostMatrix::dense(c).unwrap()
        })
        .collect();
    let epsilon = rng.random_range(0.3..1.0);
    TreeProblem::new(tree, nodes, costs, epsilon).unwrap()
}

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
fn criterion_01_aprox_closed_forms() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA9201);
    let mut worst_search = 0.0f64;
    let mut worst_closed = 0.0f64;
    for _ in 0..1000 {
        let penalty = random_penalty(&mut rng, true);
        let eps = rng.random_range(0.1..5.0);
        let p = rng.random_range(-10.0..10.0);
        let closed = penalty.aprox(eps, p).unwrap();
        let searched = aprox_by_golden_section(&penalty, eps, p);
        worst_search = worst_search.max((closed - searched).abs());
        let reference = match penalty {
            MarginalPenalty::Equality => {
                assert_eq!(closed, p);
                p
            }
            MarginalPenalty::Free => {
                assert_eq!(closed, 0.0);
                0.0
            }
            MarginalPenalty::Kl { weight } => weight / (weight + eps) * p,
            MarginalPenalty::Tv { weight } => p.clamp(-weight, weight),
        };
        worst_closed = worst_closed.max((closed - reference).abs());
    }
    let elapsed = start.elapsed();
    assert!(worst_search < 1e-8, "max |closed − searched| = {worst_search:e}");
    assert!(worst_closed < 1e-12, "max closed-form deviation = {worst_closed:e}");
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 1: aprox vs direct minimization {worst_search:.3e}, closed forms {worst_closed:.3e}, {elapsed:?}"
    );
}

/// Criteria 2 and 3 share their 20 random instances; both are checked in
/// one pass so the dual trace really belongs to the compared runs.
#[test]
fn criterion_02_03_oracle_equivalence_and_dual_monotonicity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE97);
    let mut worst_potential = 0.0f64;
    let mut worst_projection = 0.0f64;
    let mut worst_backslide = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(2..=5);
        let problem = random_problem(&mut rng, n, 6, true);
        let eps = problem.epsilon();
        let mut sweeper = TreeSweeper::new(&problem).unwrap();
        let order = sweeper.order().to_vec();
        let mut dense = DenseSolver::new(&problem, DEFAULT_DENSE_CAP, DenseDomain::Log).unwrap();
        let mut last_dual = f64::NEG_INFINITY;
        for _ in 0..50 {
            sweeper
                .sweep_with(|_, state| {
                    let dual =
                        dual_objective(&problem, &state.log_potentials(eps)).unwrap();
                    if last_dual.is_finite() {
                        worst_backslide = worst_backslide.max(last_dual - dual);
                    }
                    last_dual = dual;
                })
                .unwrap();
            dense.sweep(&order);
        }
        for j in 0..n {
            let f_tree = sweeper.state().u(j).mapv(|x| eps * x.ln());
            let dev = f_tree
                .iter()
                .zip(dense.potentials()[j].iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst_potential = worst_potential.max(dev);
        }
        sweeper.refresh_messages().unwrap();
        let plan = dense.plan();
        for j in 0..n {
            let tree_m =
                umot::solver::node_marginal(&problem, sweeper.state(), j).unwrap();
            let dense_m = plan.node_marginal(j);
            let dev = tree_m
                .iter()
                .zip(dense_m.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst_projection = worst_projection.max(dev);
        }
    }
    let elapsed = start.elapsed();
    assert!(worst_potential < 1e-9, "potential deviation {worst_potential:e}");
    assert!(worst_projection < 1e-12, "projection deviation {worst_projection:e}");
    assert!(worst_backslide < 1e-10, "dual backslide {worst_backslide:e}");
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 2: 20 instances, potentials {worst_potential:.3e}, projections {worst_projection:.3e}, {elapsed:?}"
    );
    println!("[PASS] criterion 3: max dual backslide {worst_backslide:.3e} (slack 1e-10)");
}

#[test]
fn criterion_04_strong_duality_at_convergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD0A117);
    let mut worst_gap = 0.0f64;
    for _ in 0..6 {
        let n = rng.random_range(2..=3);
        // Finite-divergence penalties so the primal of the recovered plan
        // is finite.
        let problem = random_problem(&mut rng, n, 4, false);
        let config =
            SolverConfig { tolerance: 1e-12, max_sweeps: 50_000, ..Default::default() };
        let (state, diag) = tree_sinkhorn(&problem, &config).unwrap();
        assert!(diag.converged, "instance did not converge to 1e-12");
        let plan = recover_plan_dense(&problem, &state, DEFAULT_DENSE_CAP).unwrap();
        let primal = primal_objective(&problem, &plan).unwrap();
        let dual = diag.final_dual + problem.epsilon() * problem.reference_product_mass();
        let gap = (primal - dual).abs() / primal.abs().max(1.0);
        worst_gap = worst_gap.max(gap);
    }
    assert!(worst_gap < 1e-6, "relative duality gap {worst_gap:e}");
    println!("[PASS] criterion 4: max relative duality gap {worst_gap:.3e}");
}

#[test]
fn criterion_05_star_plan_factorization() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xFAC708);
    let n = 3;
    let m = 5;
    let center = n;
    let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, center)).collect();
    let tree =
        TreeGraph::validate(n + 1, &edges, &[1.0 / 3.0; 3], &(0..n).collect::<Vec<_>>()).unwrap();
    let mut nodes: Vec<ProblemNode> = (0..n)
        .map(|_| {
            ProblemNode::new(random_measure(&mut rng, m), MarginalPenalty::Kl { weight: 1.0 })
        })
        .collect();
    let support = DiscreteMeasure::from_points_1d(
        &(0..m).map(|i| i as f64 / (m - 1) as f64).collect::<Vec<_>>(),
        &vec![1.0; m],
    )
    .unwrap();
    nodes.push(ProblemNode::free(support));
    let costs: Vec<CostMatrix> = (0..n)
        .map(|_| {
            CostMatrix::dense(Array2::from_shape_fn((m, m), |_| rng.random_range(0.0..0.6)))
                .unwrap()
        })
        .collect();
    let problem = TreeProblem::new(tree, nodes, costs, 0.4).unwrap();
    let config = SolverConfig { tolerance: 1e-13, max_sweeps: 20_000, ..Default::default() };
    let (state, diag) = tree_sinkhorn(&problem, &config).unwrap();
    assert!(diag.converged);

    let plan = recover_plan_dense(&problem, &state, DEFAULT_DENSE_CAP).unwrap();
    let xi = plan.node_marginal(center);
    let pairs: Vec<Array2<f64>> = (0..n).map(|i| plan.pair_marginal(i, center)).collect();
    let mut worst = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for y in 0..m {
                    let lhs = plan.get(&[a, b, c, y]);
                    let rhs = pairs[0][[a, y]] * pairs[1][[b, y]] * pairs[2][[c, y]]
                        / xi[y].powi((n - 1) as i32);
                    worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
                }
            }
        }
    }
    assert!(worst < 1e-8, "factorization deviation {worst:e}");
    println!("[PASS] criterion 5: star plan factorization, entrywise deviation {worst:.3e}");
}

#[test]
fn criterion_06_barycenter_sum_equals_joint_value() {
    let start = Instant::now();
    let m = 20;
    let measures = vec![
        gaussian_1d(m, 0.25, 0.1, 1.0),
        gaussian_1d(m, 0.55, 0.12, 1.5),
        gaussian_1d(m, 0.8, 0.09, 0.8),
    ];
    let penalties = vec![MarginalPenalty::Kl { weight: 1.0 }; 3];
    let t = [0.3, 0.45, 0.25];
    let epsilon = 0.05;
    let support = DiscreteMeasure::support_only(measures[0].points().clone()).unwrap();
    let problem =
        build_barycenter_problem(&measures, &penalties, &t, &support, epsilon).unwrap();
    let config = SolverConfig { tolerance: 1e-13, max_sweeps: 100_000, ..Default::default() };
    let (state, diag) = tree_sinkhorn(&problem, &config).unwrap();
    assert!(diag.converged);
    let joint_value = diag.final_dual;
    let xi = extract_barycenter(&problem, &state).unwrap();
    let lhs = barycenter_sum_value(&measures, &penalties, &t, &xi, epsilon, &config).unwrap();
    let rel = (lhs - joint_value).abs() / joint_value.abs().max(1e-12);
    let elapsed = start.elapsed();
    assert!(rel < 1e-5, "pinned sum {lhs} vs joint {joint_value}, relative {rel:e}");
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 6: pinned sum {lhs:.9} = joint value {joint_value:.9} (rel {rel:.3e}), {elapsed:?}"
    );
}

#[test]
fn criterion_07_kernel_application_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB00C37);
    for _ in 0..6 {
        let n = rng.random_range(2..=7);
        let problem = random_problem(&mut rng, n, 4, true);
        let mut sweeper = TreeSweeper::new(&problem).unwrap();
        let mut last = sweeper.state().kernel_applications();
        for _ in 0..4 {
            sweeper.sweep().unwrap();
            let now = sweeper.state().kernel_applications();
            assert_eq!(now - last, 2 * (n as u64 - 1), "N = {n}");
            last = now;
        }
    }
    println!("[PASS] criterion 7: exactly 2(N-1) kernel applications per sweep, N in 2..=7");
}

#[test]
fn criterion_08_separable_kernels_match_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5E9A);
    let mut worst = 0.0f64;
    for &(h, w) in &[(8usize, 8usize), (16, 16), (24, 17), (32, 32)] {
        let m = DiscreteMeasure::grid(h, w, Array1::ones(h * w)).unwrap();
        let cost = CostMatrix::squared_distance(&m, &m).unwrap();
        let kernel = GibbsKernel::new(&cost, 0.5, 0.02).unwrap();
        assert!(kernel.is_separable());
        let dense = kernel.to_dense();
        let v = Array1::from(
            (0..h * w).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<f64>>(),
        );
        for transpose in [false, true] {
            let fast = kernel.apply(v.view(), transpose).unwrap();
            let slow = if transpose { dense.t().dot(&v) } else { dense.dot(&v) };
            let scale = slow.iter().map(|x| x.abs()).fold(1e-300, f64::max);
            let rel = fast
                .iter()
                .zip(slow.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                / scale;
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-12, "relative deviation {worst:e}");
    println!("[PASS] criterion 8: separable vs dense kernels up to 32x32, deviation {worst:.3e}");
}

#[test]
fn criterion_09_balanced_two_marginal_sanity() {
    let m = 50;
    let mu0 = gaussian_1d(m, 0.35, 0.12, 1.0);
    let mu1 = gaussian_1d(m, 0.65, 0.12, 1.0);
    let tree = TreeGraph::validate(2, &[(0, 1)], &[1.0], &[0, 1]).unwrap();
    let cost = CostMatrix::squared_distance(&mu0, &mu1).unwrap();
    let problem = TreeProblem::new(
        tree,
        vec![
            ProblemNode::new(mu0.clone(), MarginalPenalty::Equality),
            ProblemNode::new(mu1.clone(), MarginalPenalty::Equality),
        ],
        vec![cost],
        0.01,
    )
    .unwrap();
    let config = SolverConfig { tolerance: 1e-11, max_sweeps: 2000, ..Default::default() };
    let (state, diag) = tree_sinkhorn(&problem, &config).unwrap();
    let plan = recover_plan_dense(&problem, &state, DEFAULT_DENSE_CAP).unwrap();
    let err0 = plan
        .node_marginal(0)
        .iter()
        .zip(mu0.weights())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let err1 = plan
        .node_marginal(1)
        .iter()
        .zip(mu1.weights())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let err = err0.max(err1);
    assert!(diag.sweeps <= 2000);
    assert!(err < 1e-7, "marginal error {err:e} after {} sweeps", diag.sweeps);
    println!(
        "[PASS] criterion 9: balanced N=2 at eps 0.01, marginal error {err:.3e} in {} sweeps",
        diag.sweeps
    );
}

#[test]
fn criterion_10_tracking_joint_beats_sequential() {
    let start = Instant::now();
    let config_path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/track.toml");
    let config = ConfigFile::load(std::path::Path::new(config_path)).unwrap();
    let section = config.track.expect("track section in shipped config");
    assert_eq!(section.grid, 32);
    let out = std::env::temp_dir().join("umot_acceptance_track");
    let outcome =
        umot_cli::experiments::track::run(&section, &config.solver, &out, 42, false).unwrap();
    let elapsed = start.elapsed();
    assert!(
        outcome.umot_error <= outcome.uot_error,
        "joint {} vs sequential {}",
        outcome.umot_error,
        outcome.uot_error
    );
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 10: squared error joint {:.6} <= sequential {:.6}, {elapsed:?}",
        outcome.umot_error, outcome.uot_error
    );
}

#[test]
fn criterion_11_joint_barycenter_is_sharper_than_coupled() {
    let m = 60;
    let measures = vec![gaussian_1d(m, 0.2, 0.05, 1.0), gaussian_1d(m, 0.8, 0.08, 2.0)];
    let penalties = vec![MarginalPenalty::Kl { weight: 1.0 }; 2];
    let t = [0.5, 0.5];
    let epsilon = 0.005;
    let support = DiscreteMeasure::support_only(measures[0].points().clone()).unwrap();

    let problem =
        build_barycenter_problem(&measures, &penalties, &t, &support, epsilon).unwrap();
    let config = SolverConfig { tolerance: 1e-10, max_sweeps: 50_000, ..Default::default() };
    let (state, diag) = tree_sinkhorn(&problem, &config).unwrap();
    assert!(diag.converged);
    let xi_joint = extract_barycenter(&problem, &state).unwrap();

    // The sharpness gap is O(1); the coupled minimizer only needs enough
    // accuracy to place its entropy, so the pinned solves can run loose.
    let inner = SolverConfig { tolerance: 1e-6, max_sweeps: 20_000, ..Default::default() };
    let outer = CoupledConfig { max_outer: 200, gradient_tolerance: 1e-4, ..Default::default() };
    let coupled =
        coupled_barycenter(&measures, &penalties, &t, &support, epsilon, &inner, &outer)
            .unwrap();

    let sharp_joint = neg_entropy(xi_joint.weights());
    let sharp_coupled = neg_entropy(coupled.xi.weights());
    assert!(
        sharp_joint >= sharp_coupled - 1e-9,
        "joint {sharp_joint} vs coupled {sharp_coupled}"
    );
    println!(
        "[PASS] criterion 11: negative entropy joint {sharp_joint:.6} >= coupled {sharp_coupled:.6} (masses {:.4} / {:.4})",
        xi_joint.total_mass(),
        coupled.xi.total_mass()
    );
}
