//! Dual objective evaluation.
//!
//! ```text
//! D(f) = − Σᵢ ⟨μᵢ, φᵢ*(−fᵢ)⟩ − ε ⟨γ^⊗, exp((f^⊕ − c)/ε)⟩
//! ```
//!
//! The second term is the total mass of the unnormalized plan `K ⊙ u` and
//! is evaluated through the tree factorization — a single leaf-to-root pass
//! of kernel applications — so no dense tensor is ever formed.  The `−1`
//! summand of the full dual is dropped; add `ε·Π mᵢ` (the reference product
//! mass) to recover the value whose optimum meets the primal.

use super::TreeProblem;
use crate::Result;
use ndarray::Array1;

/// Dual value as a function of the log potentials `f`.
pub fn dual_objective(problem: &TreeProblem, f: &[Array1<f64>]) -> Result<f64> {
    let eps = problem.epsilon();
    let u: Vec<Array1<f64>> = f.iter().map(|fi| fi.mapv(|x| (x / eps).exp())).collect();
    dual_from_scalings(problem, &u)
}

/// Same functional evaluated from the exp-domain scaling vectors.
pub(super) fn dual_from_scalings(problem: &TreeProblem, u: &[Array1<f64>]) -> Result<f64> {
    if u.len() != problem.node_count() {
        return Err(crate::Error::LengthMismatch(u.len(), problem.node_count()));
    }
    let eps = problem.epsilon();

    let mut conjugate_sum = 0.0;
    for j in 0..problem.node_count() {
        let penalty = problem.penalty(j);
        let mu = problem.node(j).measure.weights();
        for (k, &uk) in u[j].iter().enumerate() {
            let w = mu[k];
            if w == 0.0 {
                // 0·φ*(·) = 0 by the usual convention, even at +∞.
                continue;
            }
            let fk = eps * uk.ln();
            let c = penalty.conjugate_tolerant(-fk);
            if c.is_infinite() {
                return Ok(f64::NEG_INFINITY);
            }
            conjugate_sum += w * c;
        }
    }

    let mass = plan_mass(problem, u)?;
    Ok(-conjugate_sum - eps * mass)
}

/// Total mass of `K ⊙ u` by contracting leaves into the root.
pub(super) fn plan_mass(problem: &TreeProblem, u: &[Array1<f64>]) -> Result<f64> {
    let tree = problem.tree();
    let root = tree.default_root();
    let plan = tree.preorder(root)?;
    let mut acc: Vec<Array1<f64>> = u.to_vec();
    for j in plan.reversed() {
        if let Some(p) = plan.parent(j) {
            let edge = tree.edge_between(p, j).expect("parent edge exists");
            let msg = problem.kernel(edge).apply(acc[j].view(), p > j)?;
            acc[p] *= &msg;
        }
    }
    Ok(acc[root].sum())
}
