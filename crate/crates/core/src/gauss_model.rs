//! Problem instances for the remote (CEO) problem: a hidden Gaussian source
//! `X ~ N(0, Σ_X)` observed as `Y = A X + N` with independent noises.
//!
//! The rate-scaled noise `N(r)` with variance `σ²_i / (1 - e^{-2 r_i})` is
//! represented only by the diagonal of its inverse, `u_i = (1 - e^{-2 r_i}) /
//! σ²_i`, so `r_i = 0` is the exact value `u_i = 0` and never an infinity.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::subset::{Subset, MAX_OBSERVATIONS};

/// A validated remote-source instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    sigma_x: Matrix,
    sigma_x_inv: Matrix,
    a: Matrix,
    noise_var: Vec<f64>,
}

impl SourceModel {
    /// Validates and builds a model. `a` must be `L x K` with `L = noise_var.len()`.
    pub fn new(sigma_x: Matrix, a: Matrix, noise_var: Vec<f64>) -> Result<Self> {
        let k = sigma_x.nrows();
        if !sigma_x.is_square() || k == 0 {
            return Err(Error::DimensionMismatch {
                what: "sigma_x",
                expected: "nonempty square matrix".into(),
                found: format!("{}x{}", sigma_x.nrows(), sigma_x.ncols()),
            });
        }
        let l = noise_var.len();
        if l == 0 {
            return Err(Error::DimensionMismatch {
                what: "noise_var",
                expected: "at least one observation".into(),
                found: "0".into(),
            });
        }
        if l > MAX_OBSERVATIONS {
            return Err(Error::TooManyObservations {
                max: MAX_OBSERVATIONS,
                found: l,
            });
        }
        if a.nrows() != l || a.ncols() != k {
            return Err(Error::DimensionMismatch {
                what: "a",
                expected: format!("{l}x{k}"),
                found: format!("{}x{}", a.nrows(), a.ncols()),
            });
        }
        if sigma_x.iter().chain(a.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite matrix entry".into()));
        }
        let tol = linalg::default_tol(&sigma_x);
        if !linalg::is_symmetric(&sigma_x, 1e-12 * (1.0 + linalg::max_abs(&sigma_x))) {
            return Err(Error::NonSymmetric("sigma_x"));
        }
        if linalg::min_eigenvalue(&sigma_x) <= tol {
            return Err(Error::NotPositiveDefinite("sigma_x"));
        }
        for (index, &value) in noise_var.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonpositiveNoise { index, value });
            }
        }
        let sigma_x = linalg::symmetrize(&sigma_x);
        let sigma_x_inv = linalg::spd_inverse(&sigma_x, "sigma_x")?;
        Ok(SourceModel {
            sigma_x,
            sigma_x_inv,
            a,
            noise_var,
        })
    }

    /// Hidden dimension `K`.
    pub fn k(&self) -> usize {
        self.sigma_x.nrows()
    }

    /// Number of observations `L`.
    pub fn l(&self) -> usize {
        self.noise_var.len()
    }

    pub fn sigma_x(&self) -> &Matrix {
        &self.sigma_x
    }

    pub fn sigma_x_inv(&self) -> &Matrix {
        &self.sigma_x_inv
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn noise_var(&self) -> &[f64] {
        &self.noise_var
    }

    /// `u` at infinite rate: `1 / σ²_i`.
    pub fn full_rate_u(&self) -> Vec<f64> {
        self.noise_var.iter().map(|s| 1.0 / s).collect()
    }

    /// `Σ_X^{-1} + Aᵀ diag(u) A`.
    pub fn precision(&self, u: &[f64]) -> Matrix {
        let mut m = self.sigma_x_inv.clone();
        for (i, &ui) in u.iter().enumerate() {
            if ui != 0.0 {
                let row = self.a.row(i);
                m += row.transpose() * row * ui;
            }
        }
        linalg::symmetrize(&m)
    }

    /// Same as [`precision`](Self::precision) with `u` zeroed on `s`, i.e.
    /// `Σ_X^{-1} + Aᵀ Σ^{-1}_{N_{S^c}(r_{S^c})} A`.
    pub fn precision_without(&self, u: &[f64], s: Subset) -> Matrix {
        let masked: Vec<f64> = u
            .iter()
            .enumerate()
            .map(|(i, &x)| if s.contains(i) { 0.0 } else { x })
            .collect();
        self.precision(&masked)
    }

    /// Posterior covariance `Σ_{X|Y} = (Σ_X^{-1} + Aᵀ Σ_N^{-1} A)^{-1}`.
    pub fn conditional_covariance(&self) -> Matrix {
        let m = self.precision(&self.full_rate_u());
        linalg::spd_inverse(&m, "posterior precision").expect("precision is positive definite")
    }

    /// Error covariance of the linear MMSE estimate from the test channels at `r`:
    /// `(Σ_X^{-1} + Aᵀ Σ^{-1}_{N(r)} A)^{-1}`.
    pub fn error_covariance(&self, r: &RateAllocation) -> Result<Matrix> {
        let u = self.scaled_noise_inverse(r)?;
        linalg::spd_inverse(&self.precision(&u), "precision")
    }

    /// The `u`-vector `u_i = (1 - e^{-2 r_i}) / σ²_i`.
    pub fn scaled_noise_inverse(&self, r: &RateAllocation) -> Result<Vec<f64>> {
        self.check_rates(r)?;
        Ok(r.as_slice()
            .iter()
            .zip(&self.noise_var)
            .map(|(&ri, &s)| rate_to_fraction(ri) / s)
            .collect())
    }

    pub(crate) fn check_rates(&self, r: &RateAllocation) -> Result<()> {
        if r.len() != self.l() {
            return Err(Error::DimensionMismatch {
                what: "rate allocation",
                expected: self.l().to_string(),
                found: r.len().to_string(),
            });
        }
        Ok(())
    }
}

/// `1 - e^{-2r}` without cancellation for small `r`.
pub fn rate_to_fraction(r: f64) -> f64 {
    -(-2.0 * r).exp_m1()
}

/// Inverse of [`rate_to_fraction`]: `r = -½ ln(1 - t)`.
pub fn fraction_to_rate(t: f64) -> f64 {
    -0.5 * (-t).ln_1p()
}

/// Nonnegative per-encoder rate parameters `r^L`, in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct RateAllocation(Vec<f64>);

impl RateAllocation {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        for (index, &value) in r.iter().enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::NegativeRate { index, value });
            }
        }
        Ok(RateAllocation(r))
    }

    pub fn zeros(l: usize) -> Self {
        RateAllocation(vec![0.0; l])
    }

    pub fn uniform(l: usize, r: f64) -> Result<Self> {
        Self::new(vec![r; l])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Copy with `r_i = 0` for every `i` in `s`.
    pub fn zeroed_on(&self, s: Subset) -> RateAllocation {
        RateAllocation(
            self.0
                .iter()
                .enumerate()
                .map(|(i, &x)| if s.contains(i) { 0.0 } else { x })
                .collect(),
        )
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// A distortion criterion on the estimation error of `X`.
#[derive(Debug, Clone, PartialEq)]
pub enum DistortionSpec {
    /// Error covariance must satisfy `Σ ⪯ Σ_d`.
    Matrix(Matrix),
    /// `[Γ Σ Γᵀ]_ii ≤ D_i` for every `i`.
    Vector { gamma: Matrix, d: Vec<f64> },
    /// `tr[Γ Σ Γᵀ] ≤ D`.
    Sum { gamma: Matrix, d: f64 },
}

impl DistortionSpec {
    pub fn sum(gamma: Matrix, d: f64) -> Self {
        DistortionSpec::Sum { gamma, d }
    }

    pub fn vector(gamma: Matrix, d: Vec<f64>) -> Self {
        DistortionSpec::Vector { gamma, d }
    }

    pub fn dim(&self) -> usize {
        match self {
            DistortionSpec::Matrix(m) => m.nrows(),
            DistortionSpec::Vector { gamma, .. } | DistortionSpec::Sum { gamma, .. } => gamma.nrows(),
        }
    }

    pub fn gamma(&self) -> Option<&Matrix> {
        match self {
            DistortionSpec::Matrix(_) => None,
            DistortionSpec::Vector { gamma, .. } | DistortionSpec::Sum { gamma, .. } => Some(gamma),
        }
    }

    /// Checks the spec invariants against hidden dimension `k`.
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.dim() != k {
            return Err(Error::SpecDimensionMismatch {
                expected: k,
                found: self.dim(),
            });
        }
        match self {
            DistortionSpec::Matrix(m) => {
                if !m.is_square() {
                    return Err(Error::SpecDimensionMismatch {
                        expected: k,
                        found: m.ncols(),
                    });
                }
                if !linalg::is_symmetric(m, 1e-12 * (1.0 + linalg::max_abs(m))) {
                    return Err(Error::NonSymmetric("sigma_d"));
                }
                if linalg::min_eigenvalue(m) <= 0.0 {
                    return Err(Error::NotPositiveDefinite("sigma_d"));
                }
            }
            DistortionSpec::Vector { gamma, d } => {
                check_gamma(gamma, k)?;
                if d.len() != k {
                    return Err(Error::SpecDimensionMismatch {
                        expected: k,
                        found: d.len(),
                    });
                }
                if d.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    return Err(Error::InvalidSpec("distortion levels must be positive".into()));
                }
            }
            DistortionSpec::Sum { gamma, d } => {
                check_gamma(gamma, k)?;
                if !(*d > 0.0 && d.is_finite()) {
                    return Err(Error::InvalidSpec("distortion level must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_gamma(gamma: &Matrix, k: usize) -> Result<()> {
    if gamma.nrows() != k || gamma.ncols() != k {
        return Err(Error::SpecDimensionMismatch {
            expected: k,
            found: gamma.nrows(),
        });
    }
    let det = gamma.determinant();
    if !(det.abs() > 1e-12 * (1.0 + linalg::max_abs(gamma)).powi(k as i32)) {
        return Err(Error::SingularGamma);
    }
    Ok(())
}

/// `m1 ⪯ m2`: true iff the smallest eigenvalue of `m2 - m1` is at least `-tol`.
pub fn psd_order_leq(m1: &Matrix, m2: &Matrix, tol: f64) -> Result<bool> {
    if m1.shape() != m2.shape() || !m1.is_square() {
        return Err(Error::DimensionMismatch {
            what: "psd_order_leq",
            expected: format!("{}x{}", m1.nrows(), m1.ncols()),
            found: format!("{}x{}", m2.nrows(), m2.ncols()),
        });
    }
    Ok(linalg::min_eigenvalue(&(m2 - m1)) >= -tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn m1() -> SourceModel {
        SourceModel::new(dmatrix![1.0], dmatrix![1.0; 1.0], vec![1.0, 1.0]).unwrap()
    }

    fn m2() -> SourceModel {
        SourceModel::new(Matrix::identity(2, 2), Matrix::identity(2, 2), vec![1.0, 0.25]).unwrap()
    }

    #[test]
    fn validate_accepts_and_rejects() {
        assert_eq!(m1().k(), 1);
        assert_eq!(m1().l(), 2);
        assert_eq!(
            SourceModel::new(dmatrix![-1.0], dmatrix![1.0; 1.0], vec![1.0, 1.0]),
            Err(Error::NotPositiveDefinite("sigma_x"))
        );
        assert!(matches!(
            SourceModel::new(dmatrix![1.0], dmatrix![1.0; 1.0; 1.0], vec![1.0, 1.0]),
            Err(Error::DimensionMismatch { what: "a", .. })
        ));
        assert_eq!(
            SourceModel::new(dmatrix![1.0, 0.5; 0.4, 1.0], Matrix::identity(2, 2), vec![1.0, 1.0]),
            Err(Error::NonSymmetric("sigma_x"))
        );
        assert_eq!(
            SourceModel::new(dmatrix![1.0], dmatrix![1.0; 1.0], vec![1.0, 0.0]),
            Err(Error::NonpositiveNoise { index: 1, value: 0.0 })
        );
    }

    #[test]
    fn conditional_covariance_examples() {
        assert!((m1().conditional_covariance()[(0, 0)] - 1.0 / 3.0).abs() < 1e-14);
        let c = m2().conditional_covariance();
        assert!((c - dmatrix![0.5, 0.0; 0.0, 0.2]).abs().max() < 1e-14);
        let blind = SourceModel::new(dmatrix![2.0, 0.3; 0.3, 1.0], Matrix::zeros(3, 2), vec![1.0, 2.0, 3.0]).unwrap();
        assert!((blind.conditional_covariance() - blind.sigma_x()).abs().max() < 1e-14);
    }

    #[test]
    fn scaled_noise_inverse_examples() {
        let m = m1();
        assert_eq!(
            m.scaled_noise_inverse(&RateAllocation::zeros(2)).unwrap(),
            vec![0.0, 0.0]
        );
        let half = 0.5 * 2f64.ln();
        let u = m
            .scaled_noise_inverse(&RateAllocation::uniform(2, half).unwrap())
            .unwrap();
        assert!((u[0] - 0.5).abs() < 1e-15 && (u[1] - 0.5).abs() < 1e-15);
        let u = m
            .scaled_noise_inverse(&RateAllocation::uniform(2, 40.0).unwrap())
            .unwrap();
        assert!((u[0] - 1.0).abs() < 1e-15);
        assert_eq!(
            RateAllocation::new(vec![0.1, -0.2]),
            Err(Error::NegativeRate { index: 1, value: -0.2 })
        );
    }

    #[test]
    fn psd_order_examples() {
        let i2 = Matrix::identity(2, 2);
        assert!(psd_order_leq(&i2, &i2, 0.0).unwrap());
        let a = dmatrix![2.0, 1.0; 1.0, 2.0];
        let b = i2.clone() * 3.0;
        assert!(psd_order_leq(&a, &b, 1e-12).unwrap());
        assert!(!psd_order_leq(&b, &a, 1e-12).unwrap());
        assert!(psd_order_leq(&i2, &Matrix::identity(3, 3), 0.0).is_err());
    }

    #[test]
    fn spec_validation() {
        let g = Matrix::identity(2, 2);
        assert!(DistortionSpec::sum(g.clone(), 0.5).validate(2).is_ok());
        assert_eq!(
            DistortionSpec::sum(g.clone(), 0.5).validate(1),
            Err(Error::SpecDimensionMismatch { expected: 1, found: 2 })
        );
        assert_eq!(
            DistortionSpec::sum(dmatrix![1.0, 1.0; 1.0, 1.0], 0.5).validate(2),
            Err(Error::SingularGamma)
        );
        assert!(DistortionSpec::vector(g, vec![0.5, -1.0]).validate(2).is_err());
    }
}
