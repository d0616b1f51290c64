//! Correspondence between the multiterminal (direct) problem `Y = X + N`,
//! where the decoder reconstructs `Y` itself, and the remote problem with
//! hidden source `X` observed through `Y`.

use crate::error::{Error, Result};
use crate::gauss_model::{check_gamma, fraction_to_rate, DistortionSpec, RateAllocation, SourceModel};
use crate::linalg::{self, Matrix};
use crate::matching::MatchVerdict;
use crate::optim::{self, SearchConfig};
use crate::rate_region::{SumRate, Variant};
use crate::subset::{all_subsets, Subset};

/// `Y^L = X^L + N^L` with independent noise, `Σ_N = diag(noise_var)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectModel {
    remote: SourceModel,
    sigma_y: Matrix,
}

impl DirectModel {
    pub fn new(sigma_x: Matrix, noise_var: Vec<f64>) -> Result<Self> {
        let l = noise_var.len();
        if sigma_x.nrows() != l || sigma_x.ncols() != l {
            return Err(Error::DimensionMismatch {
                what: "sigma_x",
                expected: format!("{l}x{l}"),
                found: format!("{}x{}", sigma_x.nrows(), sigma_x.ncols()),
            });
        }
        let remote = SourceModel::new(sigma_x.clone(), Matrix::identity(l, l), noise_var.clone())?;
        let sigma_y = sigma_x + linalg::diag(&noise_var);
        Ok(DirectModel { remote, sigma_y })
    }

    pub fn l(&self) -> usize {
        self.remote.l()
    }

    pub fn sigma_x(&self) -> &Matrix {
        self.remote.sigma_x()
    }

    pub fn noise_var(&self) -> &[f64] {
        self.remote.noise_var()
    }

    pub fn sigma_y(&self) -> &Matrix {
        &self.sigma_y
    }

    pub fn sigma_n(&self) -> Matrix {
        linalg::diag(self.noise_var())
    }

    /// The equivalent remote model (`K = L`, `A = I`).
    pub fn remote(&self) -> &SourceModel {
        &self.remote
    }

    /// `Σ_V^{-1}` with entries `(e^{2 r_i} - 1)/σ²_i`, zeroed on `s`.
    pub fn v_inverse(&self, r: &RateAllocation, s: Subset) -> Result<Vec<f64>> {
        self.remote.check_rates(r)?;
        Ok(r.as_slice()
            .iter()
            .zip(self.noise_var())
            .enumerate()
            .map(|(i, (&ri, &sn))| if s.contains(i) { 0.0 } else { (2.0 * ri).exp_m1() / sn })
            .collect())
    }

    /// `(Σ_Y^{-1} + Σ_V^{-1})^{-1}`, the error covariance of `Y` given the test channels.
    pub fn error_covariance(&self, r: &RateAllocation) -> Result<Matrix> {
        let v = self.v_inverse(r, Subset::EMPTY)?;
        linalg::spd_inverse(&self.y_precision(&v)?, "precision")
    }

    fn y_precision(&self, v_inv: &[f64]) -> Result<Matrix> {
        Ok(linalg::spd_inverse(&self.sigma_y, "sigma_y")? + linalg::diag(v_inv))
    }
}

/// Matrices relating the two problems for a given `Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityMatrices {
    /// `Ã = (Σ_X^{-1} + Σ_N^{-1})^{-1} Σ_N^{-1}`, so `X = Ã Y + Ñ`.
    pub a_tilde: Matrix,
    /// `B = Σ_N + Σ_N Σ_X^{-1} Σ_N`.
    pub b: Matrix,
    pub b_diag: Vec<f64>,
    /// `B̃ = Γ B Γᵀ`.
    pub b_tilde: Matrix,
    pub b_tilde_diag: Vec<f64>,
}

pub fn duality_matrices(dm: &DirectModel, gamma: &Matrix) -> Result<DualityMatrices> {
    check_gamma(gamma, dm.l())?;
    let (a_tilde, b) = a_tilde_and_b(dm)?;
    let b_tilde = linalg::symmetrize(&(gamma * &b * gamma.transpose()));
    Ok(DualityMatrices {
        b_diag: b.diagonal().iter().cloned().collect(),
        b_tilde_diag: b_tilde.diagonal().iter().cloned().collect(),
        a_tilde,
        b,
        b_tilde,
    })
}

fn a_tilde_and_b(dm: &DirectModel) -> Result<(Matrix, Matrix)> {
    let n = dm.sigma_n();
    let n_inv = linalg::diag(&dm.noise_var().iter().map(|s| 1.0 / s).collect::<Vec<_>>());
    let sx_inv = dm.remote.sigma_x_inv();
    let sigma_n_tilde = linalg::spd_inverse(&(sx_inv + &n_inv), "posterior precision")?;
    let a_tilde = &sigma_n_tilde * n_inv;
    let b = linalg::symmetrize(&(&n + &n * sx_inv * &n));
    Ok((a_tilde, b))
}

/// `Σ_Ñ = (Σ_X^{-1} + Σ_N^{-1})^{-1}` and `Ã^{-1} Σ_Ñ Ã^{-T}`, the second form of `B`.
pub fn b_from_noise_tilde(dm: &DirectModel) -> Result<Matrix> {
    let (a_tilde, _) = a_tilde_and_b(dm)?;
    let a_inv = linalg::general_inverse(&a_tilde)?;
    let sigma_n_tilde = dm.remote.conditional_covariance();
    Ok(linalg::symmetrize(&(&a_inv * sigma_n_tilde * a_inv.transpose())))
}

/// Maps a direct criterion on `Y` to the equivalent remote model and criterion on `X`:
/// `Σ_d ↦ Ã(Σ_d + B)Ãᵀ`, `(Γ, D^L) ↦ (ΓÃ^{-1}, D^L + b̃^L)`, `(Γ, D) ↦ (ΓÃ^{-1}, D + tr B̃)`.
pub fn convert_spec(dm: &DirectModel, spec: &DistortionSpec) -> Result<(SourceModel, DistortionSpec)> {
    spec.validate(dm.l())?;
    let (a_tilde, b) = a_tilde_and_b(dm)?;
    let converted = match spec {
        DistortionSpec::Matrix(sigma_d) => {
            DistortionSpec::Matrix(linalg::symmetrize(&(&a_tilde * (sigma_d + &b) * a_tilde.transpose())))
        }
        DistortionSpec::Vector { gamma, d } => {
            let bt = gamma * &b * gamma.transpose();
            DistortionSpec::Vector {
                gamma: gamma * linalg::general_inverse(&a_tilde)?,
                d: d.iter().enumerate().map(|(i, di)| di + bt[(i, i)]).collect(),
            }
        }
        DistortionSpec::Sum { gamma, d } => {
            let bt = gamma * &b * gamma.transpose();
            DistortionSpec::Sum {
                gamma: gamma * linalg::general_inverse(&a_tilde)?,
                d: d + bt.trace(),
            }
        }
    };
    Ok((dm.remote.clone(), converted))
}

/// Inverse of [`convert_spec`]: a remote criterion for `dm.remote()` back to the direct one.
pub fn unconvert_spec(dm: &DirectModel, spec: &DistortionSpec) -> Result<DistortionSpec> {
    spec.validate(dm.l())?;
    let (a_tilde, b) = a_tilde_and_b(dm)?;
    let a_inv = linalg::general_inverse(&a_tilde)?;
    Ok(match spec {
        DistortionSpec::Matrix(m) => DistortionSpec::Matrix(linalg::symmetrize(&(&a_inv * m * a_inv.transpose() - &b))),
        DistortionSpec::Vector { gamma, d } => {
            let g = gamma * &a_tilde;
            let bt = &g * &b * g.transpose();
            DistortionSpec::Vector {
                d: d.iter().enumerate().map(|(i, di)| di - bt[(i, i)]).collect(),
                gamma: g,
            }
        }
        DistortionSpec::Sum { gamma, d } => {
            let g = gamma * &a_tilde;
            let bt = &g * &b * g.transpose();
            DistortionSpec::Sum {
                d: d - bt.trace(),
                gamma: g,
            }
        }
    })
}

/// `J̃_S` (theta `None`) or `J̲̃_S(θ, ·)` computed from `Σ_Y` and `Σ_V` directly.
///
/// For the lower variant `θ` plays the role of `|Σ_d + B|`.
pub fn tilde_j(dm: &DirectModel, s: Subset, r: &RateAllocation, theta: Option<f64>) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::EmptySubset);
    }
    s.check(dm.l())?;
    if let Some(theta) = theta {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::NonpositiveTheta(theta));
        }
    }
    let logdet_rest = linalg::spd_logdet(&dm.y_precision(&dm.v_inverse(r, s)?)?, "precision")?;
    match theta {
        None => {
            let full = linalg::spd_logdet(&dm.y_precision(&dm.v_inverse(r, Subset::EMPTY)?)?, "precision")?;
            Ok((0.5 * (full - logdet_rest)).max(0.0))
        }
        Some(theta) => {
            let (_, b) = a_tilde_and_b(dm)?;
            let num = linalg::spd_logdet(&(dm.sigma_y() + b), "sigma_y + B")? + 2.0 * r.sum();
            let den = theta.ln() + linalg::spd_logdet(dm.sigma_y(), "sigma_y")? + logdet_rest;
            Ok((0.5 * (num - den)).max(0.0))
        }
    }
}

/// All `J̃_S` or `J̲̃_S` values at `r`, indexed by mask (`f_∅ = 0`).
pub fn tilde_j_all(dm: &DirectModel, r: &RateAllocation, variant: Variant) -> Result<Vec<f64>> {
    let theta = match variant {
        Variant::Upper => None,
        Variant::Lower { theta } => Some(theta),
    };
    all_subsets(dm.l())
        .map(|s| {
            if s.is_empty() {
                Ok(0.0)
            } else {
                tilde_j(dm, s, r, theta)
            }
        })
        .collect()
}

fn direct_excess(spec: &DistortionSpec, err: &Matrix) -> (f64, f64) {
    match spec {
        DistortionSpec::Matrix(sd) => (linalg::max_eigenvalue(&(err - sd)), 1.0 + linalg::max_abs(sd)),
        DistortionSpec::Vector { gamma, d } => {
            let e = gamma * err * gamma.transpose();
            let x = (0..d.len()).map(|i| e[(i, i)] - d[i]).fold(f64::NEG_INFINITY, f64::max);
            (x, 1.0 + d.iter().cloned().fold(0.0, f64::max))
        }
        DistortionSpec::Sum { gamma, d } => ((gamma * err * gamma.transpose()).trace() - d, 1.0 + d),
    }
}

/// `r` meets the direct criterion on `(Σ_Y^{-1} + Σ_V^{-1})^{-1}`.
pub fn direct_feasible(dm: &DirectModel, spec: &DistortionSpec, r: &RateAllocation) -> Result<bool> {
    spec.validate(dm.l())?;
    let err = dm.error_covariance(r)?;
    let (x, scale) = direct_excess(spec, &err);
    Ok(x <= 1e-9 * scale)
}

/// Direct sum rate `min J̃_Λ(r)` over allocations meeting the direct criterion,
/// computed without going through the remote model.
pub fn direct_sum_rate_inner(dm: &DirectModel, spec: &DistortionSpec, cfg: &SearchConfig) -> Result<SumRate> {
    spec.validate(dm.l())?;
    let sy_inv = linalg::spd_inverse(dm.sigma_y(), "sigma_y")?;
    let ln_sy_inv = linalg::spd_logdet(&sy_inv, "sigma_y")?;
    let precision = |t: &[f64]| -> Matrix {
        let v: Vec<f64> = t
            .iter()
            .zip(dm.noise_var())
            .map(|(&t, &s)| t / ((1.0 - t) * s))
            .collect();
        &sy_inv + linalg::diag(&v)
    };
    let feasible = |t: &[f64]| -> bool {
        match linalg::spd_inverse(&precision(t), "precision") {
            Ok(err) => direct_excess(spec, &err).0 <= 0.0,
            Err(_) => false,
        }
    };
    let objective = |t: &[f64]| -> f64 {
        match linalg::spd_logdet(&precision(t), "precision") {
            Ok(ld) => (0.5 * (ld - ln_sy_inv)).max(0.0),
            Err(_) => f64::INFINITY,
        }
    };
    let out = optim::minimize(dm.l(), &feasible, &objective, cfg, &[])
        .ok_or_else(|| Error::InfeasibleSpec(format!("criterion needs rates above r_max = {}", cfg.r_max)))?;
    Ok(SumRate {
        value: out.value,
        r: RateAllocation::new(out.t.iter().map(|&t| fraction_to_rate(t)).collect())?,
    })
}

/// Direct-problem matching test `0 < D ≤ (L + 1) μ*_min - tr B̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectMatchReport {
    /// Smallest eigenvalue of `B̃`.
    pub mu_min: f64,
    pub threshold: f64,
    pub verdict: MatchVerdict,
}

pub fn matching_direct(dm: &DirectModel, gamma: &Matrix, d: f64) -> Result<DirectMatchReport> {
    let m = duality_matrices(dm, gamma)?;
    let mu_min = linalg::min_eigenvalue(&m.b_tilde);
    let threshold = (dm.l() as f64 + 1.0) * mu_min - m.b_tilde.trace();
    let verdict = if d > 0.0 && d <= threshold * (1.0 + 1e-12) + 1e-15 {
        MatchVerdict::Matched
    } else {
        MatchVerdict::Unknown
    };
    Ok(DirectMatchReport {
        mu_min,
        threshold,
        verdict,
    })
}

/// Direct instance built for a normalized diagonal `Γ` and a scale `δ`,
/// with both matching guarantees evaluated on it.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalBoundReport {
    pub model: DirectModel,
    /// Smallest eigenvalue of the constructed hidden covariance.
    pub lambda_min: f64,
    /// `δ - δ²/λ_min`.
    pub bound_at_delta: f64,
    /// `λ_min / 4`, the bound at the best `δ = λ_min / 2`.
    pub best_bound: f64,
    /// The general eigenvalue-based report for the same instance.
    pub general: DirectMatchReport,
}

/// Builds `Σ_N = δ Γ^{-2}` and `Σ_X = Σ_Y - Σ_N` for diagonal `Γ` with
/// `Σ γ_i^{-2} = 1`, which gives `B̃ = δ I + δ² (Γ Σ_X Γ)^{-1}`.
pub fn diagonal_gamma_bound(sigma_y: &Matrix, gamma_diag: &[f64], delta: f64, d: f64) -> Result<DiagonalBoundReport> {
    let l = gamma_diag.len();
    if sigma_y.nrows() != l || sigma_y.ncols() != l {
        return Err(Error::DimensionMismatch {
            what: "sigma_y",
            expected: format!("{l}x{l}"),
            found: format!("{}x{}", sigma_y.nrows(), sigma_y.ncols()),
        });
    }
    if gamma_diag.iter().any(|g| !(*g != 0.0 && g.is_finite())) {
        return Err(Error::SingularGamma);
    }
    let norm: f64 = gamma_diag.iter().map(|g| 1.0 / (g * g)).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "diagonal Γ must satisfy Σ γ_i^-2 = 1 (got {norm})"
        )));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter("δ must be positive".into()));
    }
    let noise: Vec<f64> = gamma_diag.iter().map(|g| delta / (g * g)).collect();
    let sigma_x = sigma_y - linalg::diag(&noise);
    let lambda_min = linalg::min_eigenvalue(&sigma_x);
    if !(lambda_min > linalg::default_tol(sigma_y)) {
        return Err(Error::HiddenSourceNotPD);
    }
    let model = DirectModel::new(sigma_x, noise)?;
    let general = matching_direct(&model, &linalg::diag(gamma_diag), d)?;
    Ok(DiagonalBoundReport {
        model,
        lambda_min,
        bound_at_delta: delta - delta * delta / lambda_min,
        best_bound: lambda_min / 4.0,
        general,
    })
}
