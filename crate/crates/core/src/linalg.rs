//! Small dense helpers on top of nalgebra. Every matrix in this crate is at
//! most 16x16, so nothing here tries to be clever about allocation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Scale-aware tolerance `1e-9 * (1 + max|entry|)`.
pub fn default_tol(m: &Matrix) -> f64 {
    1e-9 * (1.0 + max_abs(m))
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &Matrix, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues in ascending
/// order; column `j` of the returned matrix belongs to eigenvalue `j`.
pub fn sym_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.nrows();
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut v: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &Matrix) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(m: &Matrix, name: &'static str) -> Result<Matrix> {
    let chol = symmetrize(m).cholesky().ok_or(Error::NotPositiveDefinite(name))?;
    Ok(symmetrize(&chol.inverse()))
}

/// `log|m|` for a symmetric positive definite matrix.
pub fn spd_logdet(m: &Matrix, name: &'static str) -> Result<f64> {
    let chol = symmetrize(m).cholesky().ok_or(Error::NotPositiveDefinite(name))?;
    let l = chol.l_dirty();
    Ok(2.0 * (0..m.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

pub fn general_inverse(m: &Matrix) -> Result<Matrix> {
    m.clone().try_inverse().ok_or(Error::SingularGamma)
}

pub fn diag(values: &[f64]) -> Matrix {
    Matrix::from_diagonal(&nalgebra::DVector::from_column_slice(values))
}

/// Builds a matrix from row-major nested vectors; ragged input is rejected.
pub fn from_rows(rows: &[Vec<f64>], what: &'static str) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch {
            what,
            expected: format!("{ncols} columns"),
            found: format!("{} columns", bad.len()),
        });
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
