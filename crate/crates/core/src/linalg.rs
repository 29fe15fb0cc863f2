//! Numerical kernels shared by the models: multi-target ridge regression,
//! sample moments, correlation, symmetric eigendecomposition and PCA.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::GameLikeMatrix;
use crate::error::{Error, Result};

/// Smallest acceptable ratio between the extreme Cholesky pivots before a
/// system is reported as singular.
const PIVOT_RATIO_FLOOR: f64 = 1e-14;

/// `min ‖Y − XW‖²_F + λ‖W‖²_F` over a shared design matrix.
#[derive(Debug, Clone, Copy)]
pub struct RidgeProblem<'a> {
    pub design: &'a DMatrix<f64>,
    pub targets: &'a DMatrix<f64>,
    pub lambda: f64,
}

impl RidgeProblem<'_> {
    pub fn solve(&self) -> Result<DMatrix<f64>> {
        ridge_solve(self.design, self.targets, self.lambda)
    }
}

/// Ridge coefficients `(XᵀX + λI)⁻¹XᵀY`, one column per target.
pub fn ridge_solve(design: &DMatrix<f64>, targets: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    if design.nrows() != targets.nrows() {
        return Err(Error::Dimension(format!(
            "design has {} rows but targets have {}",
            design.nrows(),
            targets.nrows()
        )));
    }
    let gram = design.tr_mul(design);
    let rhs = design.tr_mul(targets);
    solve_regularized_gram(gram, rhs, lambda)
}

/// Solves `(G + λI) W = B` for symmetric positive semidefinite `G`.
pub fn solve_regularized_gram(mut gram: DMatrix<f64>, rhs: DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!("regularization {lambda} must be finite and >= 0")));
    }
    if gram.nrows() != gram.ncols() || gram.nrows() != rhs.nrows() {
        return Err(Error::Dimension(format!(
            "gram {}x{} against right-hand side with {} rows",
            gram.nrows(),
            gram.ncols(),
            rhs.nrows()
        )));
    }
    for d in 0..gram.nrows() {
        gram[(d, d)] += lambda;
    }
    let singular = || {
        Error::Numerical(format!(
            "regularized system is singular at lambda = {lambda}; use a positive lambda"
        ))
    };
    let chol = gram.cholesky().ok_or_else(singular)?;
    let pivots = chol.l_dirty().diagonal();
    let (lo, hi) = pivots
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    if !pivots.is_empty() && (lo * lo) <= PIVOT_RATIO_FLOOR * hi * hi {
        return Err(singular());
    }
    Ok(chol.solve(&rhs))
}

/// Column means and the 1/n covariance of a sample matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    #[serde(with = "crate::persist::dense_vector")]
    pub mu: DVector<f64>,
    #[serde(with = "crate::persist::dense_matrix")]
    pub sigma: DMatrix<f64>,
}

pub fn sample_moments(likes: &GameLikeMatrix) -> Moments {
    moments_of(&likes.to_dense())
}

/// Moments of the rows of `samples` (rows are observations).
pub fn moments_of(samples: &DMatrix<f64>) -> Moments {
    let n = samples.nrows().max(1) as f64;
    let mu = samples.row_mean().transpose();
    let mut centered = samples.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mu[j]);
    }
    let mut sigma = centered.tr_mul(&centered) / n;
    sigma.fill_lower_triangle_with_upper_triangle();
    Moments { mu, sigma }
}

/// Correlation matrix of a covariance. Zero-variance indices correlate 0
/// with everything else and 1 with themselves.
pub fn correlation_from_cov(moments: &Moments) -> DMatrix<f64> {
    correlation_of(&moments.sigma)
}

pub fn correlation_of(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let m = sigma.nrows();
    let scale: Vec<f64> = (0..m)
        .map(|i| {
            let v = sigma[(i, i)];
            if v > 0.0 {
                v.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            1.0
        } else if scale[i] == 0.0 || scale[j] == 0.0 {
            0.0
        } else {
            (sigma[(i, j)] / (scale[i] * scale[j])).clamp(-1.0, 1.0)
        }
    })
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending; column `k` of
/// `vectors` pairs with `values[k]`.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn sym_eig(matrix: &DMatrix<f64>) -> Result<SymEig> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let q = matrix.nrows();
    let scale = matrix.amax().max(1.0);
    for i in 0..q {
        for j in (i + 1)..q {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Numerical(format!(
                    "matrix is not symmetric at ({i},{j})"
                )));
            }
        }
    }
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = DVector::from_iterator(q, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(q, q);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        // Fix the sign so the largest-magnitude component is positive.
        let pivot = col.iamax();
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    Ok(SymEig { values, vectors })
}

/// Centers the rows of `features`, projects them on the leading `dims`
/// principal axes and scales each projected row to unit length. Rows that
/// project to zero stay zero.
pub fn pca_project(features: &DMatrix<f64>, dims: usize) -> Result<DMatrix<f64>> {
    let (rows, cols) = features.shape();
    if dims == 0 || dims > rows.min(cols) {
        return Err(Error::Config(format!(
            "PCA dimension {dims} outside 1..={}",
            rows.min(cols)
        )));
    }
    let mean = features.row_mean();
    let mut centered = features.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    let mut gram = centered.tr_mul(&centered);
    gram.fill_lower_triangle_with_upper_triangle();
    let eig = sym_eig(&gram)?;
    let leading = eig.vectors.columns(cols - dims, dims).into_owned();
    // Leading axis first.
    let axes = DMatrix::from_fn(cols, dims, |i, k| leading[(i, dims - 1 - k)]);
    let mut projected = centered * axes;
    for mut row in projected.row_iter_mut() {
        let norm = row.norm();
        if norm > 1e-12 {
            row /= norm;
        } else {
            row.fill(0.0);
        }
    }
    Ok(projected)
}
