//! Sample moments and the scaled-residual transformation.
//!
//! Every statistic in this crate is a function of the scaled residuals
//! `Y_j = S_n^{-1/2} (X_j - mean)`, and only through their Gram products
//! `Y_j^T Y_k`. Those products are invariant under `X -> A X + b` for
//! nonsingular `A`, which is what makes the tests affine invariant.
//!
//! The sample covariance uses divisor `n`, not `n - 1`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue floor below which a covariance matrix is treated as singular.
pub const SINGULARITY_TOLERANCE: f64 = 1e-12;

/// `n` observations of a `d`-dimensional vector, one observation per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    /// Wraps an `n x d` matrix. Requires `n >= d + 1` and finite entries.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (n, d) = values.shape();
        if d == 0 {
            return Err(Error::InvalidData("data has no columns".into()));
        }
        if n < d + 1 {
            return Err(Error::InvalidData(format!(
                "need at least d + 1 = {} observations, got {n}",
                d + 1
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            // nalgebra storage is column-major
            let (row, col) = (idx % n, idx / n);
            return Err(Error::InvalidData(format!(
                "non-finite entry at row {row}, column {col}"
            )));
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some((j, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::InvalidData(format!(
                "row {j} has {} entries, expected {d}",
                r.len()
            )));
        }
        Self::new(DMatrix::from_fn(n, d, |j, c| rows[j][c]))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    /// Applies `x -> A x + b` to every observation.
    pub fn affine_transform(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        let d = self.d();
        if a.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: a.nrows(),
            });
        }
        if b.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: b.len(),
            });
        }
        let mut out = &self.values * a.transpose();
        for mut row in out.row_iter_mut() {
            row += b.transpose();
        }
        Self::new(out)
    }
}

/// Coordinate-wise arithmetic mean.
pub fn sample_mean(data: &DataMatrix) -> DVector<f64> {
    let n = data.n() as f64;
    DVector::from_iterator(
        data.d(),
        data.values.column_iter().map(|c| c.iter().sum::<f64>() / n),
    )
}

/// Sample covariance with divisor `n`.
pub fn sample_covariance(data: &DataMatrix) -> DMatrix<f64> {
    let centered = centered(data);
    let n = data.n() as f64;
    let mut s = centered.transpose() * &centered / n;
    symmetrize(&mut s);
    s
}

fn centered(data: &DataMatrix) -> DMatrix<f64> {
    let mean = sample_mean(data);
    let mut c = data.values.clone();
    for mut row in c.row_iter_mut() {
        row -= mean.transpose();
    }
    c
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Symmetric inverse square root `Q diag(lambda^{-1/2}) Q^T` of a symmetric
/// positive definite matrix.
///
/// Fails with [`Error::SingularCovariance`] when the smallest eigenvalue is
/// at most `1e-12` times the largest.
pub fn inv_sqrt_sym(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch {
            expected: s.nrows(),
            found: s.ncols(),
        });
    }
    let mut sym = s.clone();
    symmetrize(&mut sym);
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= SINGULARITY_TOLERANCE * max {
        return Err(Error::SingularCovariance {
            min_eigenvalue: min,
            max_eigenvalue: max,
        });
    }
    let scaled = DMatrix::from_fn(s.nrows(), s.ncols(), |i, j| {
        eig.eigenvectors[(i, j)] / eig.eigenvalues[j].sqrt()
    });
    let mut r = scaled * eig.eigenvectors.transpose();
    symmetrize(&mut r);
    Ok(r)
}

/// Scaled residuals `Y_j = S_n^{-1/2}(X_j - mean)` with cached squared norms
/// and a lazily computed Gram matrix.
///
/// Immutable after construction; the Gram matrix is computed at most once,
/// even under concurrent first access.
#[derive(Debug)]
pub struct ResidualSet {
    residuals: DMatrix<f64>,
    sq_norms: Vec<f64>,
    gram: OnceLock<DMatrix<f64>>,
}

impl Clone for ResidualSet {
    fn clone(&self) -> Self {
        let gram = OnceLock::new();
        if let Some(g) = self.gram.get() {
            let _ = gram.set(g.clone());
        }
        Self {
            residuals: self.residuals.clone(),
            sq_norms: self.sq_norms.clone(),
            gram,
        }
    }
}

impl ResidualSet {
    /// Wraps residual rows directly, without standardizing them.
    ///
    /// Statistics assume the rows sum to zero and have identity empirical
    /// covariance; use [`scaled_residuals`] to obtain such a set from data.
    pub fn from_residuals(residuals: DMatrix<f64>) -> Self {
        let sq_norms = residuals
            .row_iter()
            .map(|r| r.iter().map(|v| v * v).sum())
            .collect();
        Self {
            residuals,
            sq_norms,
            gram: OnceLock::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.residuals.nrows()
    }

    pub fn d(&self) -> usize {
        self.residuals.ncols()
    }

    pub fn residuals(&self) -> &DMatrix<f64> {
        &self.residuals
    }

    /// `||Y_j||^2` for each row.
    pub fn sq_norms(&self) -> &[f64] {
        &self.sq_norms
    }

    /// `n x n` matrix of inner products `Y_j^T Y_k`, computed on first use.
    pub fn gram(&self) -> &DMatrix<f64> {
        self.gram.get_or_init(|| {
            let mut g = &self.residuals * self.residuals.transpose();
            symmetrize(&mut g);
            for (j, s) in self.sq_norms.iter().enumerate() {
                g[(j, j)] = *s;
            }
            g
        })
    }
}

/// Standardizes `data` into its scaled residuals.
pub fn scaled_residuals(data: &DataMatrix) -> Result<ResidualSet> {
    let s = sample_covariance(data);
    let root = inv_sqrt_sym(&s)?;
    let y = centered(data) * root;
    Ok(ResidualSet::from_residuals(y))
}
