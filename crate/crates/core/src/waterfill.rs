//! Determinant maximisation `θ(Γ, D, r)` under a trace budget, solved in
//! closed form by water-filling over the eigenvalues `α_j` of
//! `Γ^{-T}(Σ_X^{-1} + Aᵀ Σ^{-1}_{N(r)} A)Γ^{-1}`, plus randomized and
//! coordinate-ascent searches used to check it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauss_model::{check_gamma, DistortionSpec, RateAllocation, SourceModel};
use crate::linalg::{self, Matrix};

const BISECTION_ITERS: usize = 200;
const BISECTION_TOL: f64 = 1e-12;

/// Water level `ξ`, per-mode levels `max(ξ, 1/α_j)` and their product.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterSolution {
    pub xi: f64,
    pub levels: Vec<f64>,
    /// `∏ levels`; the `|Γ|^{-2}` factor is applied by [`omega`].
    pub omega: f64,
}

/// Ascending eigenvalues of `Γ^{-T} M Γ^{-1}` for `M = Σ_X^{-1} + Aᵀ Σ^{-1}_{N(r)} A`.
pub fn alpha_spectrum(model: &SourceModel, gamma: &Matrix, r: &RateAllocation) -> Result<Vec<f64>> {
    check_gamma(gamma, model.k())?;
    let gamma_inv = linalg::general_inverse(gamma)?;
    let u = model.scaled_noise_inverse(r)?;
    Ok(alpha_from_precision(&model.precision(&u), &gamma_inv))
}

pub(crate) fn alpha_from_precision(m: &Matrix, gamma_inv: &Matrix) -> Vec<f64> {
    linalg::sym_eigenvalues(&(gamma_inv.transpose() * m * gamma_inv))
}

/// Solves `Σ_j max(ξ, 1/α_j) = d` for the water level.
pub fn water_level(alphas: &[f64], d: f64) -> Result<WaterSolution> {
    if alphas.is_empty() || alphas.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::InvalidParameter("eigenvalues must be positive".into()));
    }
    let floors: Vec<f64> = alphas.iter().map(|a| 1.0 / a).collect();
    let required: f64 = floors.iter().sum();
    if d < required - 1e-9 * (1.0 + required) {
        return Err(Error::InsufficientBudget { budget: d, required });
    }
    if d <= required {
        let omega = floors.iter().product();
        return Ok(WaterSolution {
            xi: 0.0,
            levels: floors,
            omega,
        });
    }
    let fill = |xi: f64| floors.iter().map(|&f| f.max(xi)).sum::<f64>() - d;
    let (mut lo, mut hi) = (0.0, d);
    for _ in 0..BISECTION_ITERS {
        if hi - lo <= BISECTION_TOL * 1e-3 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if fill(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Resolve the level exactly on the active piece so the levels sum to d.
    let approx = 0.5 * (lo + hi);
    let clamped: f64 = floors.iter().filter(|&&f| f >= approx).sum();
    let free = floors.iter().filter(|&&f| f < approx).count();
    let xi = if free > 0 { (d - clamped) / free as f64 } else { approx };
    let levels: Vec<f64> = floors.iter().map(|&f| f.max(xi)).collect();
    let omega = levels.iter().product();
    Ok(WaterSolution { xi, levels, omega })
}

/// `ω(Γ, D, r) = |Γ|^{-2} ∏_j max(ξ, 1/α_j)`; requires `r ∈ B_L(Γ, D)`.
pub fn omega(model: &SourceModel, gamma: &Matrix, d: f64, r: &RateAllocation) -> Result<f64> {
    Ok(omega_solution(model, gamma, d, r)?.0)
}

fn omega_solution(model: &SourceModel, gamma: &Matrix, d: f64, r: &RateAllocation) -> Result<(f64, WaterSolution)> {
    let alphas = alpha_spectrum(model, gamma, r)?;
    let sol = water_level(&alphas, d).map_err(|e| match e {
        Error::InsufficientBudget { budget, required } => {
            Error::InfeasibleAllocation(format!("tr[Γ Σ Γᵀ] = {required} exceeds D = {budget}"))
        }
        other => other,
    })?;
    let det_gamma = gamma.determinant();
    Ok((sol.omega / (det_gamma * det_gamma), sol))
}

/// Fast path used inside optimisers: `ω` from a precision matrix, or `None`
/// when the budget is below the forced minimum.
pub(crate) fn omega_from_precision(m: &Matrix, gamma_inv: &Matrix, det_gamma_sq: f64, d: f64) -> Option<f64> {
    let alphas = alpha_from_precision(m, gamma_inv);
    if alphas.iter().any(|&a| !(a > 0.0)) {
        return None;
    }
    water_level(&alphas, d).ok().map(|s| s.omega / det_gamma_sq)
}

/// The covariance `Σ_d` that attains `ω`: diagonal in the eigenbasis of
/// `Γ^{-T} M Γ^{-1}` with the water-filled levels, mapped back through `Γ`.
pub fn omega_maximizer(model: &SourceModel, gamma: &Matrix, d: f64, r: &RateAllocation) -> Result<Matrix> {
    check_gamma(gamma, model.k())?;
    let gamma_inv = linalg::general_inverse(gamma)?;
    let u = model.scaled_noise_inverse(r)?;
    let h = gamma_inv.transpose() * model.precision(&u) * &gamma_inv;
    let (alphas, vectors) = linalg::sym_eigen(&h);
    let sol =
        water_level(&alphas, d).map_err(|_| Error::InfeasibleAllocation("trace budget below forced minimum".into()))?;
    let p = &vectors * linalg::diag(&sol.levels) * vectors.transpose();
    Ok(linalg::symmetrize(&(&gamma_inv * p * gamma_inv.transpose())))
}

/// Result of the randomized determinant search.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaEstimate {
    /// Best `|Σ_d|` found; a certified lower bound on `θ`.
    pub best: f64,
    /// Value of the analytically constructed candidate.
    pub constructed: f64,
    /// Largest value among the random samples alone.
    pub sampled_max: f64,
}

/// Maximises `|Σ_d|` over `Σ_d ⪰ (Σ_X^{-1} + Aᵀ Σ^{-1}_{N(r)} A)^{-1}` under a Sum or
/// Vector criterion by random search plus one constructed candidate.
pub fn theta_oracle(
    model: &SourceModel,
    spec: &DistortionSpec,
    r: &RateAllocation,
    samples: usize,
    seed: u64,
) -> Result<ThetaEstimate> {
    spec.validate(model.k())?;
    let gamma = spec
        .gamma()
        .ok_or_else(|| Error::InvalidSpec("theta oracle needs a Sum or Vector criterion".into()))?;
    let k = model.k();
    let gamma_inv = linalg::general_inverse(gamma)?;
    let det_gamma = gamma.determinant();
    let det_gamma_sq = det_gamma * det_gamma;
    let u = model.scaled_noise_inverse(r)?;
    // Work with P = Γ Σ_d Γᵀ; the floor is E = Γ M^{-1} Γᵀ.
    let m_inv = linalg::spd_inverse(&model.precision(&u), "precision")?;
    let floor = linalg::symmetrize(&(gamma * &m_inv * gamma.transpose()));

    let constructed = match spec {
        DistortionSpec::Sum { d, .. } => {
            if floor.trace() > d + 1e-9 * (1.0 + d) {
                return Err(Error::InfeasibleAllocation(format!(
                    "tr[Γ Σ Γᵀ] = {} exceeds D = {d}",
                    floor.trace()
                )));
            }
            let h = gamma_inv.transpose() * model.precision(&u) * &gamma_inv;
            let (alphas, vectors) = linalg::sym_eigen(&h);
            let sol = water_level(&alphas, *d)?;
            let p = &vectors * linalg::diag(&sol.levels) * vectors.transpose();
            p.determinant() / det_gamma_sq
        }
        DistortionSpec::Vector { d, .. } => {
            let slack = vector_slack(&floor, d)?;
            (&floor + linalg::diag(&slack)).determinant() / det_gamma_sq
        }
        DistortionSpec::Matrix(_) => unreachable!("gamma() is None for Matrix specs"),
    };

    const BATCH: usize = 256;
    let batches = samples.div_ceil(BATCH);
    let sampled_max = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BATCH.min(samples - b * BATCH);
            let mut best = f64::NEG_INFINITY;
            for _ in 0..count {
                let rank = if rng.random_bool(0.5) { 1 } else { k };
                let g = Matrix::from_fn(k, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
                let w = &g * g.transpose();
                let scale = match spec {
                    DistortionSpec::Sum { d, .. } => (d - floor.trace()).max(0.0) / w.trace(),
                    DistortionSpec::Vector { d, .. } => (0..k)
                        .map(|i| (d[i] - floor[(i, i)]).max(0.0) / w[(i, i)])
                        .fold(f64::INFINITY, f64::min),
                    DistortionSpec::Matrix(_) => unreachable!(),
                };
                let scale = if scale.is_finite() { scale } else { 0.0 };
                let value = (&floor + w * scale).determinant() / det_gamma_sq;
                best = best.max(value);
            }
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);

    Ok(ThetaEstimate {
        best: constructed.max(sampled_max),
        constructed,
        sampled_max,
    })
}

fn vector_slack(floor: &Matrix, d: &[f64]) -> Result<Vec<f64>> {
    (0..floor.nrows())
        .map(|i| {
            let s = d[i] - floor[(i, i)];
            if s < -1e-9 * (1.0 + d[i]) {
                Err(Error::InfeasibleAllocation(format!(
                    "coordinate {}: forced distortion {} exceeds cap {}",
                    i + 1,
                    floor[(i, i)],
                    d[i]
                )))
            } else {
                Ok(s.max(0.0))
            }
        })
        .collect()
}

const VECTOR_RESTARTS: usize = 8;
const VECTOR_SWEEPS: usize = 200;

/// Numerical `θ(Γ, D^K, r)` for the per-coordinate criterion.
///
/// Every cap is active at the optimum, so `P = Γ Σ_d Γᵀ = E + diag(c) C diag(c)` with
/// `c_i² = D_i - E_ii` and `C` a correlation matrix. `C` is parameterised by a
/// lower-triangular factor with unit rows and improved by coordinate ascent
/// with golden-section line searches, restarted from seeded random factors.
/// There is no closed form for this criterion, so the value is approximate
/// (always a feasible lower bound).
pub fn theta_vector(model: &SourceModel, gamma: &Matrix, d: &[f64], r: &RateAllocation) -> Result<f64> {
    let spec = DistortionSpec::Vector {
        gamma: gamma.clone(),
        d: d.to_vec(),
    };
    spec.validate(model.k())?;
    let k = model.k();
    let u = model.scaled_noise_inverse(r)?;
    let m_inv = linalg::spd_inverse(&model.precision(&u), "precision")?;
    let floor = linalg::symmetrize(&(gamma * &m_inv * gamma.transpose()));
    let slack = vector_slack(&floor, d)?;
    let c: Vec<f64> = slack.iter().map(|s| s.sqrt()).collect();
    let det_gamma = gamma.determinant();
    let det_gamma_sq = det_gamma * det_gamma;

    let logdet = |v: &Matrix| -> f64 {
        let mut w = v.clone();
        for i in 0..k {
            let n = w.row(i).norm();
            if n > 0.0 {
                w.row_mut(i).scale_mut(1.0 / n);
            }
        }
        let corr = &w * w.transpose();
        let p = Matrix::from_fn(k, k, |i, j| floor[(i, j)] + c[i] * c[j] * corr[(i, j)]);
        let det = p.determinant();
        if det > 0.0 {
            det.ln()
        } else {
            f64::NEG_INFINITY
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x7e7a_0000 + k as u64);
    let mut best = logdet(&Matrix::identity(k, k));
    for restart in 0..VECTOR_RESTARTS {
        let mut v = if restart == 0 {
            Matrix::identity(k, k)
        } else {
            Matrix::from_fn(k, k, |i, j| if j <= i { rng.sample(StandardNormal) } else { 0.0 })
        };
        let mut value = logdet(&v);
        let mut step = 1.0;
        for _ in 0..VECTOR_SWEEPS {
            let before = value;
            for i in 1..k {
                for j in 0..=i {
                    let center = v[(i, j)];
                    let (x, fx) = golden_max(
                        |x| {
                            let mut trial = v.clone();
                            trial[(i, j)] = x;
                            logdet(&trial)
                        },
                        center - step,
                        center + step,
                    );
                    if fx > value {
                        v[(i, j)] = x;
                        value = fx;
                    }
                }
            }
            if value - before <= 1e-14 * (1.0 + value.abs()) {
                step *= 0.5;
                if step < 1e-6 {
                    break;
                }
            }
        }
        best = best.max(value);
    }
    Ok(best.exp() / det_gamma_sq)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
        if (b - a).abs() < 1e-12 {
            break;
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
