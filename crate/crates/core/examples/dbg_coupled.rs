use std::time::Instant;
use umot::kernels::CostMatrix;
use umot::measures::neg_entropy;
use umot::problems::{coupled_barycenter, pinned_uot, CoupledConfig};
use umot::solver::SolverConfig;
use umot::{DiscreteMeasure, MarginalPenalty};

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

fn main() {
    let m = 60;
    let a = gaussian_1d(m, 0.2, 0.05, 1.0);
    let b = gaussian_1d(m, 0.8, 0.08, 2.0);
    let support = DiscreteMeasure::support_only(a.points().clone()).unwrap();
    let cost = CostMatrix::squared_distance(&a, &support).unwrap();
    let inner = SolverConfig { tolerance: 1e-6, max_sweeps: 20_000, ..Default::default() };

    let xi = support
        .with_weights(ndarray::Array1::from_elem(m, 1.5 / m as f64))
        .unwrap();
    let t0 = Instant::now();
    let s =
        pinned_uot(&a, &MarginalPenalty::Kl { weight: 1.0 }, &xi, &cost, 0.01, &inner).unwrap();
    println!(
        "one pinned solve: {:?}, {} sweeps, converged {}",
        t0.elapsed(),
        s.sweeps,
        s.converged
    );

    let t0 = Instant::now();
    let outer = CoupledConfig { max_outer: 40, gradient_tolerance: 1e-4, ..Default::default() };
    let c = coupled_barycenter(
        &[a, b],
        &[MarginalPenalty::Kl { weight: 1.0 }; 2],
        &[0.5, 0.5],
        &support,
        0.005,
        &inner,
        &outer,
    )
    .unwrap();
    println!(
        "coupled (40 outer cap): {:?}, iters {}, converged {}, pg {:.3e}, E {:.4}, mass {:.4}",
        t0.elapsed(),
        c.outer_iterations,
        c.converged,
        c.gradient_norm,
        neg_entropy(c.xi.weights()),
        c.xi.total_mass()
    );
}
