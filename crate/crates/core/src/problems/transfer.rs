//! OT-based transfer operators.
//!
//! Normalizing a two-marginal plan by its source marginal,
//! `K = diag(μ_ℓ⁻¹)·π̂`, gives a row-stochastic transition matrix; other
//! measures are propagated forward in time through `Kᵀ`.

use crate::measures::DiscreteMeasure;
use crate::{Error, Result};
use ndarray::{Array1, Array2};

/// Row-sum consistency slack, relative to the source mass (floored at 1).
const ROW_SUM_TOL: f64 = 1e-8;
/// Row-stochasticity slack after normalization.
const STOCHASTIC_TOL: f64 = 1e-10;

/// A row-stochastic transition matrix from a source support to a target
/// support.
#[derive(Debug, Clone)]
pub struct TransferOperator {
    matrix: Array2<f64>,
}

impl TransferOperator {
    /// Row-normalizes a pair-marginal plan by the source weights.  The plan
    /// rows must sum to the source weights (they are its first marginal),
    /// and every source weight must be strictly positive.
    pub fn from_plan(plan: &Array2<f64>, source: &DiscreteMeasure) -> Result<Self> {
        if plan.nrows() != source.len() {
            return Err(Error::LengthMismatch(plan.nrows(), source.len()));
        }
        if plan.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidInput("plan entries must be finite and non-negative".into()));
        }
        let weights = source.weights();
        let tol = ROW_SUM_TOL * source.total_mass().max(1.0);
        let mut matrix = plan.clone();
        for (k, mut row) in matrix.rows_mut().into_iter().enumerate() {
            let w = weights[k];
            if w <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "source weight {w} at index {k} must be strictly positive"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - w).abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "row {k} of the plan sums to {sum}, expected the source weight {w}"
                )));
            }
            // Normalize by the actual row sum so rows hit 1 exactly up to
            // rounding, independent of the consistency slack.
            row.mapv_inplace(|v| v / sum);
        }
        let op = Self { matrix };
        op.check_rows()?;
        Ok(op)
    }

    /// Wraps an already row-stochastic matrix (e.g. a product of operators).
    pub fn from_stochastic(matrix: Array2<f64>) -> Result<Self> {
        let op = Self { matrix };
        op.check_rows()?;
        Ok(op)
    }

    fn check_rows(&self) -> Result<()> {
        for (k, row) in self.matrix.rows().into_iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::Numerical(format!(
                    "row {k} sums to {sum}, not row-stochastic"
                )));
            }
        }
        Ok(())
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn source_len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn target_len(&self) -> usize {
        self.matrix.ncols()
    }

    /// Chains two operators: first `self`, then `next`.
    pub fn compose(&self, next: &TransferOperator) -> Result<TransferOperator> {
        if self.target_len() != next.source_len() {
            return Err(Error::LengthMismatch(self.target_len(), next.source_len()));
        }
        TransferOperator::from_stochastic(self.matrix.dot(&next.matrix))
    }

    /// Propagates weights forward: `w ↦ Kᵀ·w`.  Total mass is preserved by
    /// row-stochasticity.
    pub fn propagate(&self, weights: &Array1<f64>) -> Result<Array1<f64>> {
        if weights.len() != self.source_len() {
            return Err(Error::LengthMismatch(weights.len(), self.source_len()));
        }
        Ok(self.matrix.t().dot(weights))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn measure(ws: &[f64]) -> DiscreteMeasure {
        let xs: Vec<f64> = (0..ws.len()).map(|i| i as f64).collect();
        DiscreteMeasure::from_points_1d(&xs, ws).unwrap()
    }

    #[test]
    fn diagonal_plan_gives_identity() {
        let mu = measure(&[0.4, 0.6]);
        let plan = array![[0.4, 0.0], [0.0, 0.6]];
        let op = TransferOperator::from_plan(&plan, &mu).unwrap();
        assert_eq!(op.matrix(), &array![[1.0, 0.0], [0.0, 1.0]]);
        let w = array![0.3, 0.7];
        assert_eq!(op.propagate(&w).unwrap(), w);
    }

    #[test]
    fn uniform_plan_gives_uniform_rows() {
        let mu = measure(&[0.5, 0.5]);
        let plan = Array2::from_elem((2, 2), 0.25);
        let op = TransferOperator::from_plan(&plan, &mu).unwrap();
        assert!(op.matrix().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn mass_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 5;
        let ws: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let mu = measure(&ws);
        let mut plan = Array2::from_shape_fn((n, n), |_| rng.random_range(0.01..1.0));
        for (k, mut row) in plan.rows_mut().into_iter().enumerate() {
            let s: f64 = row.iter().sum();
            row.mapv_inplace(|v| v * ws[k] / s);
        }
        let op = TransferOperator::from_plan(&plan, &mu).unwrap();
        let input = Array1::from((0..n).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<f64>>());
        let out = op.propagate(&input).unwrap();
        assert!((out.sum() - input.sum()).abs() < 1e-12);
    }

    #[test]
    fn chained_operators_match_composed_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 5;
        let random_op = |rng: &mut ChaCha8Rng| {
            let mut m = Array2::from_shape_fn((n, n), |_| rng.random_range(0.01..1.0));
            for mut row in m.rows_mut() {
                let s: f64 = row.iter().sum();
                row.mapv_inplace(|v| v / s);
            }
            TransferOperator::from_stochastic(m).unwrap()
        };
        let a = random_op(&mut rng);
        let b = random_op(&mut rng);
        let chained = a.compose(&b).unwrap();
        let w = Array1::from((0..n).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<f64>>());
        let two_step = b.propagate(&a.propagate(&w).unwrap()).unwrap();
        let one_step = chained.propagate(&w).unwrap();
        for (x, y) in two_step.iter().zip(one_step.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn inconsistent_rows_rejected() {
        let mu = measure(&[1.0, 1.0]);
        let plan = array![[0.5, 0.5], [0.2, 0.2]];
        assert!(TransferOperator::from_plan(&plan, &mu).is_err());
    }

    #[test]
    fn zero_source_weight_rejected() {
        let mu = measure(&[1.0, 0.0]);
        let plan = array![[0.5, 0.5], [0.0, 0.0]];
        assert!(TransferOperator::from_plan(&plan, &mu).is_err());
    }
}
