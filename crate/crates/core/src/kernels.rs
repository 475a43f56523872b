//! Cost matrices and Gibbs kernels `K = exp(−t·c/ε)`.
//!
//! Quadratic costs between two regular 2D grids split along the axes,
//! `‖x − y‖² = (x₁−y₁)² + (x₂−y₂)²`, so the kernel factorizes into two 1D
//! Gaussian matrices and a kernel application becomes `R · V · Cᵀ` on the
//! reshaped image — the full `(h·w) × (h·w)` matrix is never stored.

use crate::measures::DiscreteMeasure;
use crate::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1};

/// A non-negative cost matrix between two supports, either dense entries or
/// a squared-distance descriptor over two grids (kept implicit so kernels
/// can pick a separable backing).
#[derive(Debug, Clone)]
pub struct CostMatrix {
    kind: CostKind,
}

#[derive(Debug, Clone)]
enum CostKind {
    Dense(Array2<f64>),
    /// Squared Euclidean distance between two unit-square lattices.
    GridSquaredDistance {
        a_rows: Array1<f64>,
        a_cols: Array1<f64>,
        b_rows: Array1<f64>,
        b_cols: Array1<f64>,
    },
}

impl CostMatrix {
    /// Wraps explicit entries; all must be finite and non-negative.
    pub fn dense(entries: Array2<f64>) -> Result<Self> {
        if entries.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(Error::InvalidInput("cost entries must be finite and non-negative".into()));
        }
        Ok(Self { kind: CostKind::Dense(entries) })
    }

    /// Entrywise squared Euclidean distance between the supports of `a` and
    /// `b`.  When both supports are regular grids the matrix is kept in
    /// separable form.
    pub fn squared_distance(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch(a.dim(), b.dim()));
        }
        if let (Some(_), Some(_)) = (a.grid_shape(), b.grid_shape()) {
            let (a_rows, a_cols) = (a.grid_axis(0).unwrap(), a.grid_axis(1).unwrap());
            let (b_rows, b_cols) = (b.grid_axis(0).unwrap(), b.grid_axis(1).unwrap());
            return Ok(Self {
                kind: CostKind::GridSquaredDistance { a_rows, a_cols, b_rows, b_cols },
            });
        }
        let (pa, pb) = (a.points(), b.points());
        let mut entries = Array2::zeros((a.len(), b.len()));
        for j in 0..a.len() {
            for k in 0..b.len() {
                let mut d = 0.0;
                for l in 0..a.dim() {
                    let diff = pa[[j, l]] - pb[[k, l]];
                    d += diff * diff;
                }
                entries[[j, k]] = d;
            }
        }
        Ok(Self { kind: CostKind::Dense(entries) })
    }

    pub fn nrows(&self) -> usize {
        match &self.kind {
            CostKind::Dense(m) => m.nrows(),
            CostKind::GridSquaredDistance { a_rows, a_cols, .. } => a_rows.len() * a_cols.len(),
        }
    }

    pub fn ncols(&self) -> usize {
        match &self.kind {
            CostKind::Dense(m) => m.ncols(),
            CostKind::GridSquaredDistance { b_rows, b_cols, .. } => b_rows.len() * b_cols.len(),
        }
    }

    /// True when the cost is a grid squared-distance descriptor.
    pub fn is_grid(&self) -> bool {
        matches!(self.kind, CostKind::GridSquaredDistance { .. })
    }

    /// Materializes dense entries (row-major over grid points for the
    /// separable case).
    pub fn to_dense(&self) -> Array2<f64> {
        match &self.kind {
            CostKind::Dense(m) => m.clone(),
            CostKind::GridSquaredDistance { a_rows, a_cols, b_rows, b_cols } => {
                let (ha, wa) = (a_rows.len(), a_cols.len());
                let (hb, wb) = (b_rows.len(), b_cols.len());
                let mut out = Array2::zeros((ha * wa, hb * wb));
                for r1 in 0..ha {
                    for c1 in 0..wa {
                        for r2 in 0..hb {
                            for c2 in 0..wb {
                                let dr = a_rows[r1] - b_rows[r2];
                                let dc = a_cols[c1] - b_cols[c2];
                                out[[r1 * wa + c1, r2 * wb + c2]] = dr * dr + dc * dc;
                            }
                        }
                    }
                }
                out
            }
        }
    }

    /// A lower bound on the smallest entry (exact for dense costs).
    pub fn min_entry_lower_bound(&self) -> f64 {
        match &self.kind {
            CostKind::Dense(m) => m.iter().copied().fold(f64::INFINITY, f64::min),
            // Distances are non-negative; 0 is attained when grids overlap.
            CostKind::GridSquaredDistance { .. } => 0.0,
        }
    }
}

/// Floors for kernel entries: dense entries are clamped at the smallest
/// positive normal so logarithms in diagnostics stay finite; separable
/// factors are clamped at its square root so implied products stay normal.
const DENSE_FLOOR: f64 = f64::MIN_POSITIVE;
const FACTOR_FLOOR: f64 = 1.5e-154;

/// Gibbs kernel `K = exp(−t·c/ε)`, dense or separable over 2D grids.
#[derive(Debug, Clone)]
pub struct GibbsKernel {
    epsilon: f64,
    backing: Backing,
}

#[derive(Debug, Clone)]
enum Backing {
    Dense(Array2<f64>),
    Separable {
        /// `rows[r1, r2] = exp(−t·(x_{r1} − y_{r2})²/ε)` over row coordinates.
        rows: Array2<f64>,
        /// Same over column coordinates.
        cols: Array2<f64>,
    },
}

impl GibbsKernel {
    /// Builds `exp(−edge_weight·c/ε)`; picks the separable backing when the
    /// cost is a grid squared-distance descriptor.
    pub fn new(cost: &CostMatrix, edge_weight: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidInput(format!("epsilon {epsilon} must be positive")));
        }
        if !(edge_weight > 0.0) || !edge_weight.is_finite() {
            return Err(Error::InvalidInput(format!("edge weight {edge_weight} must be positive")));
        }
        let backing = match &cost.kind {
            CostKind::Dense(c) => {
                Backing::Dense(c.mapv(|v| (-edge_weight * v / epsilon).exp().max(DENSE_FLOOR)))
            }
            CostKind::GridSquaredDistance { a_rows, a_cols, b_rows, b_cols } => {
                let factor = |a: &Array1<f64>, b: &Array1<f64>| {
                    let mut m = Array2::zeros((a.len(), b.len()));
                    for i in 0..a.len() {
                        for j in 0..b.len() {
                            let d = a[i] - b[j];
                            m[[i, j]] =
                                (-edge_weight * d * d / epsilon).exp().max(FACTOR_FLOOR);
                        }
                    }
                    m
                };
                Backing::Separable {
                    rows: factor(a_rows, b_rows),
                    cols: factor(a_cols, b_cols),
                }
            }
        };
        Ok(Self { epsilon, backing })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn nrows(&self) -> usize {
        match &self.backing {
            Backing::Dense(k) => k.nrows(),
            Backing::Separable { rows, cols } => rows.nrows() * cols.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match &self.backing {
            Backing::Dense(k) => k.ncols(),
            Backing::Separable { rows, cols } => rows.ncols() * cols.ncols(),
        }
    }

    pub fn is_separable(&self) -> bool {
        matches!(self.backing, Backing::Separable { .. })
    }

    /// Matrix-vector product `K·v`, or `Kᵀ·v` when `transpose` is set.  The
    /// separable backing applies the two 1D factors over grid rows then
    /// columns without materializing the full matrix.
    pub fn apply(&self, v: ArrayView1<f64>, transpose: bool) -> Result<Array1<f64>> {
        let expect = if transpose { self.nrows() } else { self.ncols() };
        if v.len() != expect {
            return Err(Error::LengthMismatch(v.len(), expect));
        }
        match &self.backing {
            Backing::Dense(k) => Ok(if transpose { k.t().dot(&v) } else { k.dot(&v) }),
            Backing::Separable { rows, cols } => {
                let (h_in, w_in) = if transpose {
                    (rows.nrows(), cols.nrows())
                } else {
                    (rows.ncols(), cols.ncols())
                };
                // Strided views (matrix columns) need a contiguous copy
                // before reshaping.
                let img = v
                    .to_owned()
                    .into_shape_with_order((h_in, w_in))
                    .expect("length checked above");
                let out = if transpose {
                    rows.t().dot(&img).dot(cols)
                } else {
                    rows.dot(&img).dot(&cols.t())
                };
                let len = out.len();
                Ok(out.into_shape_with_order(len).expect("contiguous product"))
            }
        }
    }

    /// Materializes the dense kernel (test and diagnostic use).
    pub fn to_dense(&self) -> Array2<f64> {
        match &self.backing {
            Backing::Dense(k) => k.clone(),
            Backing::Separable { rows, cols } => {
                let (ha, wa) = (rows.nrows(), cols.nrows());
                let (hb, wb) = (rows.ncols(), cols.ncols());
                let mut out = Array2::zeros((ha * wa, hb * wb));
                for r1 in 0..ha {
                    for c1 in 0..wa {
                        for r2 in 0..hb {
                            for c2 in 0..wb {
                                out[[r1 * wa + c1, r2 * wb + c2]] = rows[[r1, r2]] * cols[[c1, c2]];
                            }
                        }
                    }
                }
                out
            }
        }
    }
}
