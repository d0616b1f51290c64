//! Sufficient conditions for the inner and outer sum-rate bounds to meet.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauss_model::{check_gamma, fraction_to_rate, DistortionSpec, RateAllocation, SourceModel};
use crate::linalg::{self, Matrix};
use crate::rate_region;
use crate::waterfill;

/// Outcome of a sufficient matching test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchVerdict {
    Matched,
    Unknown,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    /// `tr[Γ Σ_{X|Y} Γᵀ]`; budgets at or below it admit no allocation.
    pub feasible_lower: f64,
    /// `(K + 1) / α*_max`.
    pub threshold: f64,
    pub verdict: MatchVerdict,
}

/// Eigenvalues of `Γ^{-T}(Σ_X^{-1} + Aᵀ diag(u) A)Γ^{-1}` for an arbitrary `u`.
pub fn alpha_at_u(model: &SourceModel, gamma: &Matrix, u: &[f64]) -> Result<Vec<f64>> {
    check_gamma(gamma, model.k())?;
    check_u(model, u)?;
    let gamma_inv = linalg::general_inverse(gamma)?;
    Ok(waterfill::alpha_from_precision(&model.precision(u), &gamma_inv))
}

fn check_u(model: &SourceModel, u: &[f64]) -> Result<()> {
    if u.len() != model.l() {
        return Err(Error::DimensionMismatch {
            what: "u vector",
            expected: model.l().to_string(),
            found: u.len().to_string(),
        });
    }
    Ok(())
}

/// Largest eigenvalue at full observation rates `u_i = 1/σ²_i`.
pub fn alpha_max_star(model: &SourceModel, gamma: &Matrix) -> Result<f64> {
    let alphas = alpha_at_u(model, gamma, &model.full_rate_u())?;
    Ok(alphas[alphas.len() - 1])
}

/// Rows `â_i` of `A Γ^{-1}`.
pub fn a_hat(model: &SourceModel, gamma: &Matrix) -> Result<Matrix> {
    check_gamma(gamma, model.k())?;
    Ok(model.a() * linalg::general_inverse(gamma)?)
}

/// Orthogonal `Q` with `v Q = ‖v‖ e₁ᵀ` for a row vector `v`.
///
/// Built from the reflector towards `-sign(v₁)‖v‖e₁` and then the first
/// column is negated when needed so the image is `+‖v‖e₁`.
pub fn householder(v: &[f64]) -> Matrix {
    let k = v.len();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w: Vec<f64> = v.to_vec();
    w[0] += sign * norm;
    let wn = w.iter().map(|x| x * x).sum::<f64>();
    let mut q = Matrix::identity(k, k);
    if wn > 0.0 {
        for i in 0..k {
            for j in 0..k {
                q[(i, j)] -= 2.0 * w[i] * w[j] / wn;
            }
        }
    }
    // The reflector sends v to -sign(v₁)‖v‖e₁.
    if sign > 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// `(η_i, χ_i)` at `u`, with
/// `η_i = [Qᵀ Γ^{-T} Σ_X^{-1} Γ^{-1} Q]₁₁ + Σ_{j≠i} u_j (â_j Q)₁²` and
/// `χ_i = ‖â_i‖² / σ²_i + η_i`. `u_i` itself does not enter.
pub fn eta_chi(model: &SourceModel, gamma: &Matrix, i: usize, u: &[f64]) -> Result<(f64, f64)> {
    check_u(model, u)?;
    if i >= model.l() {
        return Err(Error::InvalidParameter(format!(
            "observation index {} out of range",
            i + 1
        )));
    }
    let ah = a_hat(model, gamma)?;
    let gamma_inv = linalg::general_inverse(gamma)?;
    let g = gamma_inv.transpose() * model.sigma_x_inv() * &gamma_inv;
    eta_chi_with(model, &ah, &g, i, u)
}

fn eta_chi_with(model: &SourceModel, ah: &Matrix, g: &Matrix, i: usize, u: &[f64]) -> Result<(f64, f64)> {
    let row: Vec<f64> = ah.row(i).iter().cloned().collect();
    let norm_sq: f64 = row.iter().map(|x| x * x).sum();
    if !(norm_sq > 0.0) {
        return Err(Error::ZeroObservationRow(i));
    }
    let q = householder(&row);
    let mut eta = (q.transpose() * g * &q)[(0, 0)];
    for (j, &uj) in u.iter().enumerate() {
        if j != i {
            let first = (ah.row(j) * &q)[(0, 0)];
            eta += uj * first * first;
        }
    }
    Ok((eta, norm_sq / model.noise_var()[i] + eta))
}

/// `1/α_min(u) - 1/α_max(u) ≤ 1/χ_i` for every observation `i`.
pub fn eigen_spread_condition(model: &SourceModel, gamma: &Matrix, u: &[f64]) -> Result<bool> {
    let alphas = alpha_at_u(model, gamma, u)?;
    let lhs = 1.0 / alphas[0] - 1.0 / alphas[alphas.len() - 1];
    let ah = a_hat(model, gamma)?;
    let gamma_inv = linalg::general_inverse(gamma)?;
    let g = gamma_inv.transpose() * model.sigma_x_inv() * &gamma_inv;
    for i in 0..model.l() {
        let (_, chi) = eta_chi_with(model, &ah, &g, i, u)?;
        if lhs > 1.0 / chi + 1e-12 * (1.0 + lhs) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Premise `tr[Γ Σ_{X|Y} Γᵀ] < D ≤ (K + 1)/α*_max`.
pub fn sufficient_matching(model: &SourceModel, gamma: &Matrix, d: f64) -> Result<MatchReport> {
    check_gamma(gamma, model.k())?;
    let feasible_lower = (gamma * model.conditional_covariance() * gamma.transpose()).trace();
    let threshold = (model.k() as f64 + 1.0) / alpha_max_star(model, gamma)?;
    let verdict = if d <= feasible_lower + 1e-12 * (1.0 + feasible_lower) {
        MatchVerdict::Infeasible
    } else if d <= threshold * (1.0 + 1e-12) {
        MatchVerdict::Matched
    } else {
        MatchVerdict::Unknown
    };
    Ok(MatchReport {
        feasible_lower,
        threshold,
        verdict,
    })
}

/// Grid used by [`md_condition_numeric`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    /// Geometric points per axis sweep.
    pub axis_points: usize,
    /// Random base points (the full-rate corner is always added).
    pub random_points: usize,
    /// Forward difference step in `r_i`.
    pub step: f64,
    /// Relative increase tolerated before reporting a violation.
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            axis_points: 32,
            random_points: 64,
            step: 1e-4,
            rel_tol: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MdOutcome {
    /// No increase found; `checked` finite differences were evaluated.
    Holds { checked: usize },
    /// `e^{-2 r_i} ω(Γ, D, r)` increased along `r_i` at `r`.
    Violation { r: RateAllocation, i: usize, increase: f64 },
}

/// Falsification scan for monotone decrease of `e^{-2 r_i} ω(Γ, D, r)` in each `r_i`
/// over the feasible set.
///
/// Base points are the full-rate corner and seeded random points of the
/// feasible set. From each, every axis is swept over a geometric ladder of
/// `u_i / u_i^max ∈ [1e-4, 1 - 1e-6]` with the other coordinates held, and a
/// forward step in `r_i` is taken wherever both ends are feasible. A clean
/// scan is evidence, not proof.
pub fn md_condition_numeric(model: &SourceModel, gamma: &Matrix, d: f64, grid: &GridConfig) -> Result<MdOutcome> {
    let spec = DistortionSpec::sum(gamma.clone(), d);
    rate_region::check_nonvoid(model, &spec)?;
    let l = model.l();
    let t_max = 1.0 - 1e-6;
    let feasible_t = |t: &[f64]| -> bool {
        let r: Vec<f64> = t.iter().map(|&t| fraction_to_rate(t)).collect();
        RateAllocation::new(r)
            .ok()
            .and_then(|r| rate_region::feasible(model, &spec, &r).ok())
            .unwrap_or(false)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    let mut bases = vec![vec![t_max; l]];
    let mut attempts = 0;
    while bases.len() < grid.random_points + 1 && attempts < 200 * (grid.random_points + 1) {
        attempts += 1;
        let t: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..t_max)).collect();
        if feasible_t(&t) {
            bases.push(t);
        }
    }

    let ladder: Vec<f64> = (0..grid.axis_points)
        .map(|k| {
            let (lo, hi) = (1e-4f64.ln(), (1.0 - 1e-6f64).ln());
            let frac = if grid.axis_points > 1 {
                k as f64 / (grid.axis_points - 1) as f64
            } else {
                1.0
            };
            (lo + frac * (hi - lo)).exp()
        })
        .collect();

    let probe = |t: &[f64], i: usize| -> Result<Option<(f64, f64)>> {
        let r = RateAllocation::new(t.iter().map(|&t| fraction_to_rate(t)).collect())?;
        let mut stepped = r.clone().into_vec();
        stepped[i] += grid.step;
        let stepped = RateAllocation::new(stepped)?;
        if !rate_region::feasible(model, &spec, &r)? || !rate_region::feasible(model, &spec, &stepped)? {
            return Ok(None);
        }
        let f0 = (-2.0 * r.as_slice()[i]).exp() * waterfill::omega(model, gamma, d, &r)?;
        let f1 = (-2.0 * stepped.as_slice()[i]).exp() * waterfill::omega(model, gamma, d, &stepped)?;
        Ok(Some((f0, f1)))
    };

    // Every (base, axis, ladder) cell is independent; results are scanned in order.
    let points = ladder.len();
    let cells: Vec<(usize, usize, usize)> = (0..bases.len())
        .flat_map(|b| (0..l).flat_map(move |i| (0..points).map(move |k| (b, i, k))))
        .collect();
    let results: Vec<Result<Option<(Vec<f64>, usize, f64, f64)>>> = cells
        .par_iter()
        .map(|&(b, i, k)| {
            let mut t = bases[b].clone();
            t[i] = ladder[k];
            Ok(probe(&t, i)?.map(|(f0, f1)| (t, i, f0, f1)))
        })
        .collect();

    let mut checked = 0;
    for res in results {
        if let Some((t, i, f0, f1)) = res? {
            checked += 1;
            if f1 > f0 * (1.0 + grid.rel_tol) {
                return Ok(MdOutcome::Violation {
                    r: RateAllocation::new(t.iter().map(|&t| fraction_to_rate(t)).collect())?,
                    i,
                    increase: f1 / f0 - 1.0,
                });
            }
        }
    }
    Ok(MdOutcome::Holds { checked })
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
    fn alpha_max_star_examples() {
        assert!((alpha_max_star(&m1(), &dmatrix![1.0]).unwrap() - 3.0).abs() < 1e-12);
        assert!((alpha_max_star(&m2(), &Matrix::identity(2, 2)).unwrap() - 5.0).abs() < 1e-12);
        let sx = dmatrix![2.0, 0.3; 0.3, 1.0];
        let model = SourceModel::new(sx.clone(), Matrix::zeros(1, 2), vec![1.0]).unwrap();
        let expected = linalg::max_eigenvalue(&linalg::spd_inverse(&sx, "sx").unwrap());
        assert!((alpha_max_star(&model, &Matrix::identity(2, 2)).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn householder_maps_to_positive_axis() {
        for v in [vec![3.0, 4.0], vec![-1.0, 2.0, 2.0], vec![0.0, -5.0], vec![2.0]] {
            let q = householder(&v);
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let row = Matrix::from_row_slice(1, v.len(), &v) * &q;
            assert!((row[(0, 0)] - n).abs() < 1e-12);
            for j in 1..v.len() {
                assert!(row[(0, j)].abs() < 1e-12);
            }
            let qtq = q.transpose() * &q;
            assert!((qtq - Matrix::identity(v.len(), v.len())).abs().max() < 1e-12);
        }
    }

    #[test]
    fn eta_chi_examples() {
        let g1 = dmatrix![1.0];
        let (eta, chi) = eta_chi(&m1(), &g1, 0, &[0.9, 0.3]).unwrap();
        assert!((eta - 1.3).abs() < 1e-12 && (chi - 2.3).abs() < 1e-12);
        let (eta, chi) = eta_chi(&m2(), &Matrix::identity(2, 2), 0, &[0.7, 3.0]).unwrap();
        assert!((eta - 1.0).abs() < 1e-12 && (chi - 2.0).abs() < 1e-12);
        let model = SourceModel::new(
            dmatrix![2.0, 0.3; 0.3, 1.0],
            dmatrix![1.0, 1.0; 0.0, 1.0],
            vec![1.0, 2.0],
        )
        .unwrap();
        let (eta, _) = eta_chi(&model, &Matrix::identity(2, 2), 0, &[0.0, 0.0]).unwrap();
        let q = householder(&[1.0, 1.0]);
        let expected = (q.transpose() * model.sigma_x_inv() * &q)[(0, 0)];
        assert!((eta - expected).abs() < 1e-12);
        let zero_row = SourceModel::new(Matrix::identity(2, 2), dmatrix![0.0, 0.0; 1.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(
            eta_chi(&zero_row, &Matrix::identity(2, 2), 0, &[0.5, 0.5]),
            Err(Error::ZeroObservationRow(0))
        );
    }

    #[test]
    fn eigen_spread_examples() {
        assert!(eigen_spread_condition(&m1(), &dmatrix![1.0], &[0.5, 0.5]).unwrap());
        assert!(!eigen_spread_condition(&m2(), &Matrix::identity(2, 2), &[0.5, 2.0]).unwrap());
    }

    #[test]
    fn sufficient_matching_examples() {
        let g = dmatrix![1.0];
        let rep = sufficient_matching(&m1(), &g, 0.5).unwrap();
        assert_eq!(rep.verdict, MatchVerdict::Matched);
        assert!((rep.feasible_lower - 1.0 / 3.0).abs() < 1e-12);
        assert!((rep.threshold - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(
            sufficient_matching(&m1(), &g, 0.7).unwrap().verdict,
            MatchVerdict::Unknown
        );
        assert_eq!(
            sufficient_matching(&m1(), &g, 0.3).unwrap().verdict,
            MatchVerdict::Infeasible
        );
    }

    #[test]
    fn md_condition_examples() {
        let grid = GridConfig::default();
        let out = md_condition_numeric(&m1(), &dmatrix![1.0], 0.6, &grid).unwrap();
        assert!(matches!(out, MdOutcome::Holds { checked } if checked > 0), "{out:?}");
        let single = SourceModel::new(dmatrix![2.0], dmatrix![1.5], vec![0.5]).unwrap();
        let out = md_condition_numeric(&single, &dmatrix![1.0], 1.0, &grid).unwrap();
        assert!(matches!(out, MdOutcome::Holds { .. }), "{out:?}");
        let m2 = SourceModel::new(Matrix::identity(2, 2), Matrix::identity(2, 2), vec![1.0, 0.25]).unwrap();
        let out = md_condition_numeric(&m2, &Matrix::identity(2, 2), 0.66, &grid);
        assert!(matches!(out, Err(Error::InfeasibleSpec(_))), "{out:?}");
        let out = md_condition_numeric(&m2, &Matrix::identity(2, 2), 0.75, &grid).unwrap();
        assert!(matches!(out, MdOutcome::Holds { .. }), "{out:?}");
    }
}
