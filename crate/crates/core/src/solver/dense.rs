//! Dense N-way tensor path: the brute-force coordinate ascent used as an
//! oracle for the tree solver, plus plan materialization and the primal
//! objective.
//!
//! The (c,ε)-transform of coordinate j,
//!
//! ```text
//! f^{(c,ε,j)} = ε·ln σ_{μⱼ} − ε·ln Σ_{x₋ⱼ} exp((f^⊕ⱼ − c)/ε),
//! ```
//!
//! is evaluated with a max shift per output entry so small ε stays finite
//! in the log domain.  Guarded by an entry cap, since the cost and plan
//! tensors are materialized.

use super::{DenseDomain, ScalingState, TreeProblem};
use crate::measures::MarginalPenalty;
use crate::{Error, Result};
use ndarray::{Array1, Array2};

/// Row-major shape bookkeeping for flat tensor storage.
#[derive(Debug, Clone)]
struct Shape {
    dims: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl Shape {
    fn new(dims: Vec<usize>) -> Self {
        let mut strides = vec![1; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let len = dims.iter().product();
        Self { dims, strides, len }
    }

    #[inline]
    fn coord(&self, flat: usize, axis: usize) -> usize {
        (flat / self.strides[axis]) % self.dims[axis]
    }
}

fn checked_len(problem: &TreeProblem, cap: usize) -> Result<usize> {
    match problem.dense_len() {
        Some(len) if len <= cap => Ok(len),
        Some(len) => Err(Error::DenseCapExceeded { required: len, cap }),
        None => Err(Error::DenseCapExceeded { required: usize::MAX, cap }),
    }
}

/// Flat weighted cost tensor `c(x) = Σₑ tₑ·cₑ(x_a, x_b)`.
fn assemble_cost(problem: &TreeProblem, shape: &Shape) -> Vec<f64> {
    let mut cost = vec![0.0; shape.len];
    for (e, &(a, b)) in problem.tree().edges().iter().enumerate() {
        let w = problem.tree().edge_weight(e);
        let ce = problem.cost(e).to_dense();
        for (flat, c) in cost.iter_mut().enumerate() {
            *c += w * ce[[shape.coord(flat, a), shape.coord(flat, b)]];
        }
    }
    cost
}

/// Brute-force coordinate-ascent solver on the dense product support.
pub struct DenseSolver<'a> {
    problem: &'a TreeProblem,
    shape: Shape,
    cost: Vec<f64>,
    /// Gibbs tensor exp(−c/ε); built lazily for the exp domain.
    gibbs: Option<Vec<f64>>,
    f: Vec<Array1<f64>>,
    domain: DenseDomain,
}

impl<'a> DenseSolver<'a> {
    pub fn new(problem: &'a TreeProblem, cap: usize, domain: DenseDomain) -> Result<Self> {
        let len = checked_len(problem, cap)?;
        let shape = Shape::new(problem.support_sizes());
        debug_assert_eq!(shape.len, len);
        let cost = assemble_cost(problem, &shape);
        let f = (0..problem.node_count())
            .map(|j| Array1::zeros(problem.support_size(j)))
            .collect();
        Ok(Self { problem, shape, cost, gibbs: None, f, domain })
    }

    pub fn potentials(&self) -> &[Array1<f64>] {
        &self.f
    }

    /// Replaces the log potentials (warm starts).
    pub fn set_potentials(&mut self, f: Vec<Array1<f64>>) -> Result<()> {
        if f.len() != self.f.len() {
            return Err(Error::LengthMismatch(f.len(), self.f.len()));
        }
        for (j, fj) in f.iter().enumerate() {
            if fj.len() != self.shape.dims[j] {
                return Err(Error::LengthMismatch(fj.len(), self.shape.dims[j]));
            }
            if fj.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite potential at node {j}")));
            }
        }
        self.f = f;
        Ok(())
    }

    /// Scaling vectors `u = exp(f/ε)`.
    pub fn scalings(&self) -> Vec<Array1<f64>> {
        let eps = self.problem.epsilon();
        self.f.iter().map(|fi| fi.mapv(|x| (x / eps).exp())).collect()
    }

    /// The j-th (c,ε)-transform of the given potentials, max-shifted in the
    /// log domain.
    pub fn c_eps_transform(&self, f: &[Array1<f64>], j: usize) -> Array1<f64> {
        let eps = self.problem.epsilon();
        let mj = self.shape.dims[j];
        let mut maxs = vec![f64::NEG_INFINITY; mj];
        let n = self.shape.dims.len();
        let score = |flat: usize| {
            let mut s = -self.cost[flat];
            for i in 0..n {
                if i != j {
                    s += f[i][self.shape.coord(flat, i)];
                }
            }
            s / eps
        };
        for flat in 0..self.shape.len {
            let xj = self.shape.coord(flat, j);
            let s = score(flat);
            if s > maxs[xj] {
                maxs[xj] = s;
            }
        }
        let mut sums = vec![0.0; mj];
        for flat in 0..self.shape.len {
            let xj = self.shape.coord(flat, j);
            sums[xj] += (score(flat) - maxs[xj]).exp();
        }
        let mu = self.problem.node(j).measure.weights();
        Array1::from_shape_fn(mj, |k| {
            eps * mu[k].ln() - eps * (maxs[k] + sums[k].ln())
        })
    }

    /// Marginal of `K ⊙ u` onto coordinate j by direct summation.
    fn exp_projection(&mut self, j: usize) -> Array1<f64> {
        let eps = self.problem.epsilon();
        if self.gibbs.is_none() {
            self.gibbs = Some(self.cost.iter().map(|&c| (-c / eps).exp()).collect());
        }
        let gibbs = self.gibbs.as_ref().unwrap();
        let u = self.scalings();
        let n = self.shape.dims.len();
        let mut proj = Array1::zeros(self.shape.dims[j]);
        for flat in 0..self.shape.len {
            let mut v = gibbs[flat];
            for (i, ui) in u.iter().enumerate().take(n) {
                v *= ui[self.shape.coord(flat, i)];
            }
            proj[self.shape.coord(flat, j)] += v;
        }
        proj
    }

    /// One coordinate update `fⱼ ← −aprox(−f^{(c,ε,j)})`.
    pub fn update(&mut self, j: usize) {
        let eps = self.problem.epsilon();
        let penalty = *self.problem.penalty(j);
        match self.domain {
            DenseDomain::Log => {
                let t = self.c_eps_transform(&self.f, j);
                self.f[j] = t.mapv(|p| -penalty.aprox_raw(eps, -p));
            }
            DenseDomain::Exp => {
                let proj = self.exp_projection(j);
                let mu = self.problem.node(j).measure.weights().clone();
                let uj = self.f[j].mapv(|x| (x / eps).exp());
                let new_u = Array1::from_shape_fn(proj.len(), |k| {
                    penalty.scaling_update(eps, mu[k] * uj[k] / proj[k])
                });
                self.f[j] = new_u.mapv(|x| eps * x.ln());
            }
        }
    }

    /// One sweep over the given node order; returns the max relative change
    /// of the scaling vectors, matching the tree solver's stopping metric.
    pub fn sweep(&mut self, order: &[usize]) -> f64 {
        let eps = self.problem.epsilon();
        let mut max_change = 0.0f64;
        for &j in order {
            let old_u = self.f[j].mapv(|x| (x / eps).exp());
            self.update(j);
            let new_u = self.f[j].mapv(|x| (x / eps).exp());
            let num = new_u
                .iter()
                .zip(old_u.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let den = old_u.iter().map(|x| x.abs()).fold(0.0, f64::max);
            max_change = max_change.max(num / den);
        }
        max_change
    }

    /// Runs sweeps until the stopping metric drops below `tolerance` or
    /// `max_sweeps` is hit; returns (sweeps, converged).
    pub fn run(&mut self, order: &[usize], max_sweeps: usize, tolerance: f64) -> (usize, bool) {
        for sweep in 1..=max_sweeps {
            if self.sweep(order) < tolerance {
                return (sweep, true);
            }
        }
        (max_sweeps, false)
    }

    /// Dense evaluation of the dual functional (no tree factorization), for
    /// cross-checking the factored evaluation.
    pub fn dual_dense(&self) -> f64 {
        let eps = self.problem.epsilon();
        let mut conj = 0.0;
        for j in 0..self.problem.node_count() {
            let mu = self.problem.node(j).measure.weights();
            let penalty = self.problem.penalty(j);
            for (k, &w) in mu.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let c = penalty.conjugate_tolerant(-self.f[j][k]);
                if c.is_infinite() {
                    return f64::NEG_INFINITY;
                }
                conj += w * c;
            }
        }
        let mut mass = 0.0;
        for flat in 0..self.shape.len {
            let mut s = -self.cost[flat];
            for (i, fi) in self.f.iter().enumerate() {
                s += fi[self.shape.coord(flat, i)];
            }
            mass += (s / eps).exp();
        }
        -conj - eps * mass
    }

    /// Materializes the plan `exp((f^⊕ − c)/ε)` for the current potentials.
    pub fn plan(&self) -> DensePlan {
        let eps = self.problem.epsilon();
        let mut values = vec![0.0; self.shape.len];
        for (flat, v) in values.iter_mut().enumerate() {
            let mut s = -self.cost[flat];
            for (i, fi) in self.f.iter().enumerate() {
                s += fi[self.shape.coord(flat, i)];
            }
            *v = (s / eps).exp();
        }
        DensePlan { shape: Shape::new(self.shape.dims.clone()), values }
    }
}

/// A dense N-way transport plan over the product support.
#[derive(Debug, Clone)]
pub struct DensePlan {
    shape: Shape,
    values: Vec<f64>,
}

impl DensePlan {
    /// Wraps explicit tensor values (row-major over `dims`).
    pub fn from_values(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let shape = Shape::new(dims);
        if shape.len != values.len() {
            return Err(Error::LengthMismatch(shape.len, values.len()));
        }
        Ok(Self { shape, values })
    }

    pub fn dims(&self) -> &[usize] {
        &self.shape.dims
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        debug_assert_eq!(index.len(), self.shape.dims.len());
        let flat: usize = index
            .iter()
            .zip(&self.shape.strides)
            .map(|(&i, &s)| i * s)
            .sum();
        self.values[flat]
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Sum over all coordinates but `j`.
    pub fn node_marginal(&self, j: usize) -> Array1<f64> {
        let mut out = Array1::zeros(self.shape.dims[j]);
        for (flat, &v) in self.values.iter().enumerate() {
            out[self.shape.coord(flat, j)] += v;
        }
        out
    }

    /// Sum over all coordinates but `j` and `k`.
    pub fn pair_marginal(&self, j: usize, k: usize) -> Array2<f64> {
        let mut out = Array2::zeros((self.shape.dims[j], self.shape.dims[k]));
        for (flat, &v) in self.values.iter().enumerate() {
            out[[self.shape.coord(flat, j), self.shape.coord(flat, k)]] += v;
        }
        out
    }
}

/// Materializes `K ⊙ (u₁ ⊗ … ⊗ u_N)` from a tree-solver state.
pub fn recover_plan_dense(
    problem: &TreeProblem,
    state: &ScalingState,
    cap: usize,
) -> Result<DensePlan> {
    checked_len(problem, cap)?;
    let shape = Shape::new(problem.support_sizes());
    let kernels: Vec<Array2<f64>> =
        (0..problem.tree().edges().len()).map(|e| problem.kernel(e).to_dense()).collect();
    let edges = problem.tree().edges();
    let mut values = vec![0.0; shape.len];
    for (flat, v) in values.iter_mut().enumerate() {
        let mut val = 1.0;
        for j in 0..problem.node_count() {
            val *= state.u(j)[shape.coord(flat, j)];
        }
        for (e, &(a, b)) in edges.iter().enumerate() {
            val *= kernels[e][[shape.coord(flat, a), shape.coord(flat, b)]];
        }
        *v = val;
    }
    Ok(DensePlan { shape, values })
}

/// Primal objective `⟨c, π⟩ + ε·KL(π, γ^⊗) + Σᵢ D_φᵢ(πᵢ, μᵢ)` of a dense
/// plan; +∞ is a legitimate value (an Equality marginal that is not matched
/// exactly).
pub fn primal_objective(problem: &TreeProblem, plan: &DensePlan) -> Result<f64> {
    if plan.dims() != problem.support_sizes().as_slice() {
        return Err(Error::InvalidInput("plan shape does not match problem supports".into()));
    }
    let eps = problem.epsilon();
    let shape = Shape::new(plan.dims().to_vec());
    let cost = assemble_cost(problem, &shape);

    let transport: f64 = plan.values.iter().zip(&cost).map(|(&p, &c)| p * c).sum();

    // KL to the product counting measure: Σ (π ln π − π) + Π mᵢ.
    let mut entropy = 0.0;
    for &p in &plan.values {
        if p > 0.0 {
            entropy += p * p.ln() - p;
        }
    }
    entropy += problem.reference_product_mass();

    let mut divergence = 0.0;
    for j in 0..problem.node_count() {
        let marginal = plan.node_marginal(j);
        let target = &problem.node(j).measure;
        let d = match problem.penalty(j) {
            MarginalPenalty::Free => 0.0,
            penalty => {
                let as_measure = target.with_weights(marginal)?;
                penalty.divergence(&as_measure, target)?
            }
        };
        if d.is_infinite() {
            return Ok(f64::INFINITY);
        }
        divergence += d;
    }

    Ok(transport + eps * entropy + divergence)
}
