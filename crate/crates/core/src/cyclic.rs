//! Sum rate of the direct problem for cyclic-shift-invariant (circulant)
//! sources with equal noise `ε`.

use crate::duality::DirectModel;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Rate cap for the one-dimensional searches: `½ ln 1e8`.
pub fn cyclic_r_max() -> f64 {
    0.5 * 1e8f64.ln()
}

const CIRCULANT_TOL: f64 = 1e-10;

/// A circulant hidden covariance with eigenvalues `λ_i` plus noise `ε I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicInstance {
    dm: DirectModel,
    lambda: Vec<f64>,
    epsilon: f64,
}

impl CyclicInstance {
    /// Validates that `Σ_X` is circulant and that all noise variances agree.
    pub fn new(dm: DirectModel) -> Result<Self> {
        let l = dm.l();
        let sx = dm.sigma_x();
        let mut worst = 0.0f64;
        for i in 0..l {
            for j in 0..l {
                worst = worst.max((sx[(i, j)] - sx[(0, (j + l - i) % l)]).abs());
            }
        }
        if worst > CIRCULANT_TOL {
            return Err(Error::NotCirculant(worst));
        }
        let epsilon = dm.noise_var()[0];
        if dm.noise_var().iter().any(|&v| (v - epsilon).abs() > 1e-12 * epsilon) {
            return Err(Error::UnequalNoise);
        }
        let mut lambda = linalg::sym_eigenvalues(sx);
        lambda.reverse();
        Ok(CyclicInstance { dm, lambda, epsilon })
    }

    /// Circulant `Σ_X` from its first row.
    pub fn from_first_row(first_row: &[f64], epsilon: f64) -> Result<Self> {
        let l = first_row.len();
        let sx = Matrix::from_fn(l, l, |i, j| first_row[(j + l - i) % l]);
        if !linalg::is_symmetric(&sx, CIRCULANT_TOL) {
            return Err(Error::NonSymmetric("sigma_x"));
        }
        Self::new(DirectModel::new(sx, vec![epsilon; l])?)
    }

    pub fn model(&self) -> &DirectModel {
        &self.dm
    }

    /// Eigenvalues of `Σ_X`, largest first.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn l(&self) -> usize {
        self.lambda.len()
    }

    fn a(&self) -> impl Iterator<Item = f64> + '_ {
        self.lambda.iter().map(move |&l| l / (l + self.epsilon))
    }

    /// `tr B = L ε + ε² Σ 1/λ_i`.
    pub fn trace_b(&self) -> f64 {
        let e = self.epsilon;
        self.l() as f64 * e + e * e * self.lambda.iter().map(|l| 1.0 / l).sum::<f64>()
    }

    /// `|Σ_Y + B| = ∏ (λ_i + ε)² / λ_i`.
    pub fn det_sigma_y_plus_b(&self) -> f64 {
        self.lambda.iter().map(|&l| (l + self.epsilon).powi(2) / l).product()
    }

    /// `tr Σ_Y = Σ λ_i + L ε`.
    pub fn trace_sigma_y(&self) -> f64 {
        self.lambda.iter().sum::<f64>() + self.l() as f64 * self.epsilon
    }

    /// `ζ(r) = Σ 1/β_i(r)`.
    pub fn zeta(&self, r: f64) -> f64 {
        beta_spectrum(self, r).iter().map(|b| 1.0 / b).sum()
    }
}

/// `β_i(r) = (a_i - a_i² e^{-2r})/ε` with `a_i = λ_i/(λ_i + ε)`.
pub fn beta_spectrum(inst: &CyclicInstance, r: f64) -> Vec<f64> {
    let x = (-2.0 * r).exp();
    inst.a().map(|a| (a - a * a * x) / inst.epsilon).collect()
}

/// Root of `ζ(r) = d_total`, clamped to 0 when every `r ≥ 0` already meets it.
pub fn r_star(inst: &CyclicInstance, d_total: f64) -> Result<f64> {
    let tr_b = inst.trace_b();
    if !(d_total > tr_b * (1.0 + 1e-12)) {
        return Err(Error::DistortionNotPositive { d_total, floor: tr_b });
    }
    if d_total >= inst.zeta(0.0) {
        return Ok(0.0);
    }
    // ζ is increasing in x = e^{-2r} on (0, 1].
    let zeta_x = |x: f64| -> f64 { inst.a().map(|a| inst.epsilon / (a - a * a * x)).sum() };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if zeta_x(mid) > d_total {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok(if x > 0.0 { -0.5 * x.ln() } else { f64::INFINITY })
}

/// One point `(R, D)` of the parametric sum-rate curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub r: f64,
    /// Nats.
    pub rate: f64,
    pub distortion: f64,
}

/// `R = ½ log[|Σ_Y + B| e^{2Lr} ∏ β_i(r)]`, `D = Σ 1/β_i(r) - tr B`.
pub fn parametric_curve(inst: &CyclicInstance, r: f64) -> CurvePoint {
    let betas = beta_spectrum(inst, r);
    let log_prod: f64 = betas.iter().map(|b| b.ln()).sum();
    let rate = 0.5 * (inst.det_sigma_y_plus_b().ln() + 2.0 * inst.l() as f64 * r + log_prod);
    let distortion = betas.iter().map(|b| 1.0 / b).sum::<f64>() - inst.trace_b();
    CurvePoint {
        r,
        rate: rate.max(0.0),
        distortion,
    }
}

/// `ω̃(D, r)`: water-filling of `1/β_i(r)` up to the budget `D + tr B`.
pub fn omega_tilde(inst: &CyclicInstance, d: f64, r: f64) -> Result<f64> {
    let betas = beta_spectrum(inst, r);
    let sol = crate::waterfill::water_level(&betas, d + inst.trace_b())?;
    Ok(sol.omega)
}

/// `J̲̃(D, r) = ½ log[e^{2Lr} |Σ_Y + B| / ω̃(D, r)]`, floored at zero.
pub fn j_lower_cyclic(inst: &CyclicInstance, d: f64, r: f64) -> Result<f64> {
    let w = omega_tilde(inst, d, r)?;
    Ok((0.5 * (2.0 * inst.l() as f64 * r + inst.det_sigma_y_plus_b().ln() - w.ln())).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicLowerBound {
    /// Nats; infinite when `r*` lies beyond the cap.
    pub value: f64,
    pub argmin: f64,
    pub r_star: f64,
    /// `r*` exceeded [`cyclic_r_max`]; the bound diverges at this distortion.
    pub capped: bool,
}

const SCAN_POINTS: usize = 4000;

/// `min_{r* ≤ r ≤ r_max} J̲̃(D, r)` by a dense scan refined with golden sections.
pub fn sum_rate_lower_cyclic(inst: &CyclicInstance, d: f64) -> Result<CyclicLowerBound> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InfeasibleSpec(format!("distortion must be positive, got {d}")));
    }
    let rs = r_star(inst, d + inst.trace_b())?;
    let r_max = cyclic_r_max();
    if rs > r_max {
        return Ok(CyclicLowerBound {
            value: f64::INFINITY,
            argmin: rs,
            r_star: rs,
            capped: true,
        });
    }
    // Just above r* the budget can fall a rounding error short of ζ(r).
    let f = |r: f64| j_lower_cyclic(inst, d, r.max(rs)).unwrap_or(f64::INFINITY);
    let step = (r_max - rs) / SCAN_POINTS as f64;
    let mut best = (rs, f(rs));
    for k in 1..=SCAN_POINTS {
        let r = rs + step * k as f64;
        let v = f(r);
        if v < best.1 {
            best = (r, v);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(rs), (best.0 + step).min(r_max));
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..100 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        if b - a < 1e-13 {
            break;
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(CyclicLowerBound {
        value: best.1,
        argmin: best.0,
        r_star: rs,
        capped: false,
    })
}

/// Sufficient conditions for the lower bound to be tight at rate `r`.
///
/// Indices `i₀`, `i₁` are those of the smallest and largest `λ_i` (which
/// order the `β_i(r)` for large `r`). `at_rate` is the `r`-dependent
/// inequality; `uniform` is the `r`-free one that implies `at_rate` for all `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityChecks {
    pub at_rate: bool,
    pub uniform: bool,
    pub at_rate_lhs: f64,
    pub at_rate_rhs: f64,
    pub uniform_lhs: f64,
    pub uniform_rhs: f64,
}

pub fn monotonicity_conditions(inst: &CyclicInstance, r: f64) -> MonotonicityChecks {
    let l = inst.l() as f64;
    let e = inst.epsilon;
    // lambda is sorted largest first.
    let (i1, i0) = (0, inst.l() - 1);
    let lam_max = inst.lambda[i1];
    let a: Vec<f64> = inst.a().collect();
    let beta = beta_spectrum(inst, r);
    let factor = if inst.l() > 1 { l / (l - 1.0) } else { f64::INFINITY };
    let scale = ((lam_max + e) / lam_max).powi(2);

    let at_rate_lhs = beta[i1] - beta[i0];
    let at_rate_rhs = e * (2.0 * r).exp() * factor * scale * beta[i0] * beta[i0];
    let uniform_lhs = a[i1] - a[i0];
    let uniform_rhs = 4.0 * factor * scale * a[i0] * a[i0] * a[i1];
    MonotonicityChecks {
        at_rate: at_rate_lhs <= at_rate_rhs,
        uniform: uniform_lhs <= uniform_rhs,
        at_rate_lhs,
        at_rate_rhs,
        uniform_lhs,
        uniform_rhs,
    }
}
