//! Self-check property suites runnable in production builds: oracle
//! equivalence of the tree solver against the dense tensor path, aprox
//! closed forms against direct minimization, kernel separability, message
//! staleness detection, kernel-application budgets and determinism.

use crate::config::ValidateSection;
use crate::CliResult;
use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use umot::kernels::{CostMatrix, GibbsKernel};
use umot::solver::{
    dual_objective, node_marginal, tree_sinkhorn, DenseDomain, DenseSolver, ProblemNode,
    SolverConfig, TreeProblem, TreeSweeper, DEFAULT_DENSE_CAP,
};
use umot::tree::TreeGraph;
use umot::{DiscreteMeasure, MarginalPenalty};

pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_measure(rng: &mut ChaCha8Rng, m: usize) -> DiscreteMeasure {
    let xs: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
    let ws: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..1.5)).collect();
    DiscreteMeasure::from_points_1d(&xs, &ws).expect("random weights are valid")
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

fn random_problem(rng: &mut ChaCha8Rng, n: usize, max_support: usize) -> TreeProblem {
    let mut edges = Vec::new();
    for k in 1..n {
        edges.push((rng.random_range(0..k), k));
    }
    let mut weights: Vec<f64> = (0..edges.len()).map(|_| rng.random_range(0.2..1.0)).collect();
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    let given: Vec<usize> = (0..n).collect();
    let tree = TreeGraph::validate(n, &edges, &weights, &given).expect("random tree is valid");
    let mut equality_used = false;
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
            CostMatrix::dense(c).expect("non-negative cost")
        })
        .collect();
    let epsilon = rng.random_range(0.3..1.0);
    TreeProblem::new(tree, nodes, costs, epsilon).expect("random instance is valid")
}

/// Minimizes q ↦ ε·e^{(p−q)/ε} + φ*(q) by golden section, refining with
/// anchored objective differences for full precision near the minimum.
pub fn aprox_by_golden_section(penalty: &MarginalPenalty, eps: f64, p: f64) -> f64 {
    let conj_diff = |q: f64, q_ref: f64| -> f64 {
        match penalty {
            MarginalPenalty::Equality => q - q_ref,
            MarginalPenalty::Free => {
                if q <= 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            MarginalPenalty::Kl { weight: t } => {
                t * (q_ref / t).exp() * ((q - q_ref) / t).exp_m1()
            }
            MarginalPenalty::Tv { weight: t } => {
                if q > *t {
                    f64::INFINITY
                } else {
                    q.max(-*t) - q_ref.max(-*t)
                }
            }
        }
    };
    let shifted = |q: f64, q_ref: f64| -> f64 {
        eps * ((p - q_ref) / eps).exp() * ((q_ref - q) / eps).exp_m1() + conj_diff(q, q_ref)
    };
    let raw = |q: f64| -> f64 {
        let c = penalty.conjugate(q);
        if c.is_infinite() {
            f64::INFINITY
        } else {
            eps * ((p - q) / eps).exp() + c
        }
    };
    let half_width = 2.0 * p.abs() + 10.0 * (1.0 + eps);
    let (mut a, mut b) = match penalty {
        MarginalPenalty::Free => (-half_width, 0.0),
        MarginalPenalty::Tv { weight } => ((-half_width).min(-weight), *weight),
        _ => (p - half_width, p + half_width),
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut q_ref = f64::NAN;
    let eval = |q: f64, q_ref: f64| if q_ref.is_nan() { raw(q) } else { shifted(q, q_ref) };
    let mut c1 = b - phi * (b - a);
    let mut c2 = a + phi * (b - a);
    let (mut f1, mut f2) = (eval(c1, q_ref), eval(c2, q_ref));
    for iter in 0..220 {
        if f1 < f2 {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - phi * (b - a);
            f1 = eval(c1, q_ref);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + phi * (b - a);
            f2 = eval(c2, q_ref);
        }
        if iter >= 25 && iter % 30 == 25 {
            q_ref = 0.5 * (a + b);
            f1 = eval(c1, q_ref);
            f2 = eval(c2, q_ref);
        }
    }
    0.5 * (a + b)
}

fn check_aprox(samples: usize, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let penalty = random_penalty(&mut rng, true);
        let eps = rng.random_range(0.1..5.0);
        let p = rng.random_range(-10.0..10.0);
        let closed = penalty.aprox(eps, p).expect("positive epsilon");
        let searched = aprox_by_golden_section(&penalty, eps, p);
        worst = worst.max((closed - searched).abs());
    }
    CheckReport {
        name: "aprox_closed_forms",
        passed: worst < 1e-8,
        detail: format!("{samples} samples, max |closed − searched| = {worst:.3e}"),
    }
}

fn check_oracle_and_monotonicity(instances: usize, seed: u64) -> (CheckReport, CheckReport) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_potential = 0.0f64;
    let mut worst_marginal = 0.0f64;
    let mut worst_backslide = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(2..=5);
        let problem = random_problem(&mut rng, n, 6);
        let eps = problem.epsilon();
        let mut sweeper = TreeSweeper::new(&problem).expect("sweeper init");
        let order = sweeper.order().to_vec();
        let mut dense =
            DenseSolver::new(&problem, DEFAULT_DENSE_CAP, DenseDomain::Log).expect("dense init");
        let mut last_dual = f64::NEG_INFINITY;
        for _ in 0..30 {
            sweeper
                .sweep_with(|_, state| {
                    let dual = dual_objective(&problem, &state.log_potentials(eps))
                        .expect("dual evaluates");
                    worst_backslide = worst_backslide.max(last_dual - dual);
                    last_dual = dual;
                })
                .expect("sweep");
            dense.sweep(&order);
        }
        for j in 0..n {
            let f_tree = sweeper.state().u(j).mapv(|x| eps * x.ln());
            let diff = f_tree
                .iter()
                .zip(dense.potentials()[j].iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst_potential = worst_potential.max(diff);
        }
        sweeper.refresh_messages().expect("refresh");
        let plan = dense.plan();
        for j in 0..n {
            let tree_m = node_marginal(&problem, sweeper.state(), j).expect("marginal");
            let dense_m = plan.node_marginal(j);
            let diff = tree_m
                .iter()
                .zip(dense_m.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst_marginal = worst_marginal.max(diff);
        }
    }
    let oracle = CheckReport {
        name: "dense_vs_tree_oracle",
        passed: worst_potential < 1e-9 && worst_marginal < 1e-9,
        detail: format!(
            "{instances} instances, max potential dev {worst_potential:.3e}, max marginal dev {worst_marginal:.3e}"
        ),
    };
    let monotone = CheckReport {
        name: "dual_monotonicity",
        passed: worst_backslide < 1e-10,
        detail: format!("max dual backslide {worst_backslide:.3e}"),
    };
    (oracle, monotone)
}

fn check_separable_kernel() -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let g = 16;
    let m = DiscreteMeasure::grid(g, g, Array1::ones(g * g)).expect("grid");
    let cost = CostMatrix::squared_distance(&m, &m).expect("cost");
    let k = GibbsKernel::new(&cost, 0.5, 0.01).expect("kernel");
    let dense = k.to_dense();
    let v = Array1::from((0..g * g).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<f64>>());
    let fast = k.apply(v.view(), false).expect("apply");
    let slow = dense.dot(&v);
    let scale = slow.iter().map(|x| x.abs()).fold(1e-300, f64::max);
    let rel = fast
        .iter()
        .zip(slow.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale;
    CheckReport {
        name: "separable_kernel",
        passed: rel < 1e-12,
        detail: format!("{g}x{g} grid, relative deviation {rel:.3e}"),
    }
}

fn check_kernel_budget(seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = true;
    let mut detail = String::new();
    for _ in 0..4 {
        let n = rng.random_range(2..=6);
        let problem = random_problem(&mut rng, n, 4);
        let mut sweeper = TreeSweeper::new(&problem).expect("sweeper");
        let before = sweeper.state().kernel_applications();
        sweeper.sweep().expect("sweep");
        let used = sweeper.state().kernel_applications() - before;
        let expect = 2 * (n as u64 - 1);
        if used != expect {
            ok = false;
        }
        detail = format!("last: N={n}, {used} applications per sweep (expect {expect})");
    }
    CheckReport { name: "kernel_budget", passed: ok, detail }
}

fn check_stale_message_guard(seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let problem = random_problem(&mut rng, 4, 4);
    let mut sweeper = TreeSweeper::new(&problem).expect("sweeper");
    sweeper.sweep().expect("sweep");
    sweeper.refresh_messages().expect("refresh");
    let root = problem.tree().default_root();
    let clean = node_marginal(&problem, sweeper.state(), root).is_ok();
    let leaf = (0..4)
        .find(|&j| problem.tree().degree(j) == 1 && j != root)
        .expect("a tree has leaves");
    sweeper.state_mut().mark_potential_dirty(leaf);
    let tripped = matches!(
        node_marginal(&problem, sweeper.state(), root),
        Err(umot::Error::StaleMessage { .. })
    );
    CheckReport {
        name: "stale_message_guard",
        passed: clean && tripped,
        detail: format!("clean read ok: {clean}, perturbed read rejected: {tripped}"),
    }
}

fn check_determinism(seed: u64) -> CheckReport {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_problem(&mut rng, 4, 5);
        let config = SolverConfig { max_sweeps: 50, tolerance: 1e-9, ..Default::default() };
        let (state, diag) = tree_sinkhorn(&problem, &config).expect("solve");
        let mut bytes = Vec::new();
        for j in 0..4 {
            for &v in state.u(j) {
                bytes.extend_from_slice(&v.to_bits().to_le_bytes());
            }
        }
        bytes.extend_from_slice(&diag.final_dual.to_bits().to_le_bytes());
        bytes
    };
    let (a, b) = (run(), run());
    CheckReport {
        name: "determinism",
        passed: a == b,
        detail: format!("two seeded runs, {} state bytes compared", a.len()),
    }
}

/// Runs every suite, printing one line per property.  Returns the failing
/// property names.
pub fn run(section: &ValidateSection, seed: u64) -> CliResult<Vec<String>> {
    let (oracle, monotone) = check_oracle_and_monotonicity(section.instances, seed ^ 0x5eed);
    let checks = vec![
        check_aprox(section.aprox_samples, seed),
        oracle,
        monotone,
        check_separable_kernel(),
        check_kernel_budget(seed ^ 0xbeef),
        check_stale_message_guard(seed ^ 0xcafe),
        check_determinism(seed ^ 0xd00d),
    ];
    let mut failures = Vec::new();
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {}: {}", c.name, c.detail);
        if !c.passed {
            failures.push(c.name.to_string());
        }
    }
    Ok(failures)
}
