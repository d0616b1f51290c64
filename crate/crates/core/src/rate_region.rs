//! Subset rate functions, feasibility of rate allocations, per-allocation
//! rate polyhedra and sum-rate minimisation for the remote problem.

use crate::error::{Error, Result};
use crate::gauss_model::{
    check_gamma, fraction_to_rate, rate_to_fraction, DistortionSpec, RateAllocation, SourceModel,
};
use crate::linalg::{self, Matrix};
use crate::optim::{self, SearchConfig};
use crate::subset::{all_subsets, nonempty_subsets, Subset};
use crate::waterfill;

/// Values `f_S` for every `S ⊆ {1..L}`, indexed by bit mask; `f_∅ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetFunction {
    l: usize,
    values: Vec<f64>,
}

impl SubsetFunction {
    /// `values[mask]` for all `2^l` masks.
    pub fn new(l: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 1 << l {
            return Err(Error::DimensionMismatch {
                what: "subset function",
                expected: (1usize << l).to_string(),
                found: values.len().to_string(),
            });
        }
        Ok(SubsetFunction { l, values })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn value(&self, s: Subset) -> f64 {
        self.values[s.mask() as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Operational rates `R^L` in nats per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector(Vec<f64>);

impl RateVector {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        for (index, &value) in rates.iter().enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::NegativeRate { index, value });
            }
        }
        Ok(RateVector(rates))
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

    pub fn subset_sum(&self, s: Subset) -> f64 {
        s.members().map(|i| self.0[i]).sum()
    }
}

/// Which subset function bounds the polyhedron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Outer bound `J̲_S(θ, ·)`.
    Lower { theta: f64 },
    /// Inner bound `J_S(·)`.
    Upper,
}

fn check_subset(model: &SourceModel, s: Subset) -> Result<()> {
    if s.is_empty() {
        return Err(Error::EmptySubset);
    }
    s.check(model.l())
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveTheta(theta))
    }
}

/// `log |Σ_X^{-1} + Aᵀ diag(u) A|` with `u` zeroed on `S`, for every mask `S`.
pub(crate) fn restricted_logdets(model: &SourceModel, u: &[f64]) -> Result<Vec<f64>> {
    all_subsets(model.l())
        .map(|s| linalg::spd_logdet(&model.precision_without(u, s), "precision"))
        .collect()
}

fn subset_rate(r: &[f64], s: Subset) -> f64 {
    s.members().map(|i| r[i]).sum()
}

/// `J̲_S(θ, r_S | r_{S^c}) = ½ log⁺[ e^{2 Σ_S r_i} / (θ |Σ_X^{-1} + Aᵀ Σ^{-1}_{N_{S^c}} A|) ]`.
pub fn j_lower(model: &SourceModel, s: Subset, theta: f64, r: &RateAllocation) -> Result<f64> {
    check_subset(model, s)?;
    check_theta(theta)?;
    let u = model.scaled_noise_inverse(r)?;
    let logdet = linalg::spd_logdet(&model.precision_without(&u, s), "precision")?;
    Ok(lower_value(subset_rate(r.as_slice(), s), theta.ln(), logdet))
}

fn lower_value(rate: f64, ln_theta: f64, logdet_rest: f64) -> f64 {
    (rate - 0.5 * ln_theta - 0.5 * logdet_rest).max(0.0)
}

/// `J_S(r_S | r_{S^c}) = Σ_S r_i + ½ log(|M(r)| / |M_{S^c}(r)|)`.
pub fn j_upper(model: &SourceModel, s: Subset, r: &RateAllocation) -> Result<f64> {
    check_subset(model, s)?;
    let u = model.scaled_noise_inverse(r)?;
    let full = linalg::spd_logdet(&model.precision(&u), "precision")?;
    let rest = linalg::spd_logdet(&model.precision_without(&u, s), "precision")?;
    Ok(upper_value(subset_rate(r.as_slice(), s), full, rest))
}

fn upper_value(rate: f64, logdet_full: f64, logdet_rest: f64) -> f64 {
    (rate + 0.5 * (logdet_full - logdet_rest)).max(0.0)
}

/// All values of `J̲_S(θ, ·)` or `J_S(·)` at `r`.
pub fn subset_function(model: &SourceModel, r: &RateAllocation, variant: Variant) -> Result<SubsetFunction> {
    if let Variant::Lower { theta } = variant {
        check_theta(theta)?;
    }
    let u = model.scaled_noise_inverse(r)?;
    let logdets = restricted_logdets(model, &u)?;
    Ok(SubsetFunction {
        l: model.l(),
        values: subset_values(r.as_slice(), &logdets, variant),
    })
}

fn subset_values(r: &[f64], logdets: &[f64], variant: Variant) -> Vec<f64> {
    let l = r.len();
    all_subsets(l)
        .map(|s| {
            if s.is_empty() {
                return 0.0;
            }
            let rate = subset_rate(r, s);
            let rest = logdets[s.mask() as usize];
            match variant {
                Variant::Lower { theta } => lower_value(rate, theta.ln(), rest),
                Variant::Upper => upper_value(rate, logdets[0], rest),
            }
        })
        .collect()
}

/// Largest excess of the error covariance over the criterion, with the
/// tolerance scale of the criterion.
fn criterion_excess(spec: &DistortionSpec, err_cov: &Matrix) -> (f64, f64) {
    match spec {
        DistortionSpec::Matrix(sigma_d) => (
            linalg::max_eigenvalue(&(err_cov - sigma_d)),
            1.0 + linalg::max_abs(sigma_d),
        ),
        DistortionSpec::Vector { gamma, d } => {
            let e = gamma * err_cov * gamma.transpose();
            let excess = (0..d.len()).map(|i| e[(i, i)] - d[i]).fold(f64::NEG_INFINITY, f64::max);
            (excess, 1.0 + d.iter().cloned().fold(0.0, f64::max))
        }
        DistortionSpec::Sum { gamma, d } => {
            let e = gamma * err_cov * gamma.transpose();
            (e.trace() - d, 1.0 + d)
        }
    }
}

fn precision_feasible(spec: &DistortionSpec, m: &Matrix, slack: f64) -> bool {
    match linalg::spd_inverse(m, "precision") {
        Ok(err_cov) => {
            let (excess, scale) = criterion_excess(spec, &err_cov);
            excess <= slack * scale
        }
        Err(_) => false,
    }
}

/// Membership of `r` in `A_L(Σ_d)`, `B_L(Γ, D^K)` or `B_L(Γ, D)`.
pub fn feasible(model: &SourceModel, spec: &DistortionSpec, r: &RateAllocation) -> Result<bool> {
    spec.validate(model.k())?;
    let u = model.scaled_noise_inverse(r)?;
    Ok(precision_feasible(spec, &model.precision(&u), 1e-9))
}

/// Fails with `InfeasibleSpec` unless the criterion is strictly looser than
/// the full-rate error covariance `Σ_{X|Y}`.
pub fn check_nonvoid(model: &SourceModel, spec: &DistortionSpec) -> Result<()> {
    spec.validate(model.k())?;
    let (excess, scale) = criterion_excess(spec, &model.conditional_covariance());
    if excess < -1e-12 * scale {
        Ok(())
    } else {
        Err(Error::InfeasibleSpec(format!(
            "criterion is not strictly above the full-rate error covariance (excess {excess:.3e})"
        )))
    }
}

/// `Σ_{i∈S} R_i ≥ J̲_S(θ, ·)` (or `J_S` when `theta` is `None`) for every nonempty `S`.
pub fn polyhedron_contains(
    model: &SourceModel,
    rv: &RateVector,
    r: &RateAllocation,
    theta: Option<f64>,
) -> Result<bool> {
    if rv.len() != model.l() {
        return Err(Error::DimensionMismatch {
            what: "rate vector",
            expected: model.l().to_string(),
            found: rv.len().to_string(),
        });
    }
    let variant = theta.map_or(Variant::Upper, |theta| Variant::Lower { theta });
    let f = subset_function(model, r, variant)?;
    Ok(nonempty_subsets(model.l()).all(|s| rv.subset_sum(s) >= f.value(s) - 1e-12))
}

/// A failed co-polymatroid law, reported with the pair of subsets involved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    NonzeroEmpty,
    NotMonotone { a: Subset, b: Subset },
    NotSupermodular { a: Subset, b: Subset },
}

/// Checks `f_∅ = 0`, `f_A ≤ f_B` for `A ⊆ B` and
/// `f_A + f_B ≤ f_{A∩B} + f_{A∪B}` over all pairs. Cost is `4^L`.
pub fn copolymatroid_violations(model: &SourceModel, r: &RateAllocation, variant: Variant) -> Result<Vec<Violation>> {
    let f = subset_function(model, r, variant)?;
    Ok(set_function_violations(&f))
}

pub(crate) fn set_function_violations(f: &SubsetFunction) -> Vec<Violation> {
    let scale = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * (1.0 + scale);
    let mut out = Vec::new();
    if f.value(Subset::EMPTY) != 0.0 {
        out.push(Violation::NonzeroEmpty);
    }
    for a in all_subsets(f.l) {
        for b in all_subsets(f.l) {
            if a.is_subset_of(b) && f.value(a) > f.value(b) + tol {
                out.push(Violation::NotMonotone { a, b });
            }
            if a.mask() < b.mask() && f.value(a) + f.value(b) > f.value(a.intersection(b)) + f.value(a.union(b)) + tol {
                out.push(Violation::NotSupermodular { a, b });
            }
        }
    }
    out
}

/// A minimised sum rate together with the allocation attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct SumRate {
    pub value: f64,
    pub r: RateAllocation,
}

/// Inner and outer sum-rate bounds for one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct SumRateBounds {
    pub inner: SumRate,
    pub outer: SumRate,
}

impl SumRateBounds {
    pub fn gap(&self) -> f64 {
        self.inner.value - self.outer.value
    }
}

struct Search<'a> {
    model: &'a SourceModel,
    spec: &'a DistortionSpec,
    ln_det_sigma_x_inv: f64,
}

impl<'a> Search<'a> {
    fn new(model: &'a SourceModel, spec: &'a DistortionSpec) -> Result<Self> {
        check_nonvoid(model, spec)?;
        Ok(Search {
            model,
            spec,
            ln_det_sigma_x_inv: linalg::spd_logdet(model.sigma_x_inv(), "sigma_x")?,
        })
    }

    fn u(&self, t: &[f64]) -> Vec<f64> {
        t.iter().zip(self.model.noise_var()).map(|(t, s)| t / s).collect()
    }

    fn feasible(&self, t: &[f64]) -> bool {
        precision_feasible(self.spec, &self.model.precision(&self.u(t)), 0.0)
    }

    fn run<F>(&self, objective: F, cfg: &SearchConfig, warm: &[Vec<f64>]) -> Result<SumRate>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let out = optim::minimize(self.model.l(), &|t: &[f64]| self.feasible(t), &objective, cfg, warm)
            .ok_or_else(|| Error::InfeasibleSpec(format!("criterion needs rates above r_max = {}", cfg.r_max)))?;
        Ok(SumRate {
            value: out.value,
            r: RateAllocation::new(out.rates())?,
        })
    }

    fn inner_objective(&self, t: &[f64]) -> f64 {
        let rate: f64 = t.iter().map(|&t| fraction_to_rate(t)).sum();
        match linalg::spd_logdet(&self.model.precision(&self.u(t)), "precision") {
            Ok(ld) => (rate + 0.5 * (ld - self.ln_det_sigma_x_inv)).max(0.0),
            Err(_) => f64::INFINITY,
        }
    }

    /// `ln θ` used by the outer bound at `t`.
    fn outer_ln_theta(&self, t: &[f64]) -> f64 {
        match self.spec {
            DistortionSpec::Matrix(sigma_d) => sigma_d.determinant().ln(),
            DistortionSpec::Vector { gamma, d } => self.relaxed_ln_omega(gamma, d.iter().sum(), t),
            DistortionSpec::Sum { gamma, d } => self.relaxed_ln_omega(gamma, *d, t),
        }
    }

    fn relaxed_ln_omega(&self, gamma: &Matrix, d: f64, t: &[f64]) -> f64 {
        let Ok(gamma_inv) = linalg::general_inverse(gamma) else {
            return f64::NAN;
        };
        let det = gamma.determinant();
        waterfill::omega_from_precision(&self.model.precision(&self.u(t)), &gamma_inv, det * det, d)
            .map_or(f64::NAN, f64::ln)
    }

    fn outer_objective(&self, t: &[f64]) -> f64 {
        let rate: f64 = t.iter().map(|&t| fraction_to_rate(t)).sum();
        let ln_theta = self.outer_ln_theta(t);
        if ln_theta.is_nan() {
            return f64::INFINITY;
        }
        lower_value(rate, ln_theta, self.ln_det_sigma_x_inv)
    }
}

/// `min Σ_i r_i + ½ log(|Σ_X^{-1} + Aᵀ Σ^{-1}_{N(r)} A| / |Σ_X^{-1}|)` over feasible `r`.
pub fn sum_rate_inner(model: &SourceModel, spec: &DistortionSpec, cfg: &SearchConfig) -> Result<SumRate> {
    let search = Search::new(model, spec)?;
    search.run(|t| search.inner_objective(t), cfg, &[])
}

/// `min J̲_Λ(θ, r)` over feasible `r`.
///
/// `θ` is `ω(Γ, D, r)` for Sum criteria and `|Σ_d|` for Matrix criteria.
/// For Vector criteria `θ(Γ, D^K, r)` is replaced by its upper bound
/// `ω(Γ, Σ D_i, r)`, which keeps the result a valid (possibly loose) outer bound.
pub fn sum_rate_outer(model: &SourceModel, spec: &DistortionSpec, cfg: &SearchConfig) -> Result<SumRate> {
    let search = Search::new(model, spec)?;
    search.run(|t| search.outer_objective(t), cfg, &[])
}

/// Both bounds; the outer search also starts from the inner minimiser, which
/// makes `outer ≤ inner` hold by construction.
pub fn sum_rate_bounds(model: &SourceModel, spec: &DistortionSpec, cfg: &SearchConfig) -> Result<SumRateBounds> {
    let search = Search::new(model, spec)?;
    let inner = search.run(|t| search.inner_objective(t), cfg, &[])?;
    let warm: Vec<f64> = inner.r.as_slice().iter().map(|&r| rate_to_fraction(r)).collect();
    let outer = search.run(|t| search.outer_objective(t), cfg, &[warm])?;
    Ok(SumRateBounds { inner, outer })
}

/// Strongest statement the searches support about a rate vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Achievable: inside the inner polyhedron at `r`.
    InnerCertified(RateAllocation),
    /// Not ruled out: inside the outer polyhedron at `r` with this `θ`.
    OuterCertified {
        r: RateAllocation,
        theta: f64,
    },
    /// Every outer polyhedron the search visited misses the point by at
    /// least `margin`. Heuristic, not a proof.
    ExcludedHeuristic {
        margin: f64,
    },
    Undetermined,
}

/// Everything found by [`membership_verdict`].
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub inner: Option<RateAllocation>,
    pub outer: Option<(RateAllocation, f64)>,
    /// Smallest `max_S (J_S - Σ_S R_i)` found.
    pub inner_margin: f64,
    /// Smallest `max_S (J̲_S - Σ_S R_i)` found.
    pub outer_margin: f64,
}

impl MembershipReport {
    pub fn verdict(&self) -> Verdict {
        if let Some(r) = &self.inner {
            Verdict::InnerCertified(r.clone())
        } else if let Some((r, theta)) = &self.outer {
            Verdict::OuterCertified {
                r: r.clone(),
                theta: *theta,
            }
        } else if self.outer_margin > 0.0 {
            Verdict::ExcludedHeuristic {
                margin: self.outer_margin,
            }
        } else {
            Verdict::Undetermined
        }
    }
}

const CERTIFY_TOL: f64 = 1e-12;

/// Searches feasible allocations for a polyhedron containing `rv`.
///
/// A criterion that admits no allocation at all is reported as excluded
/// with infinite margin.
pub fn membership_verdict(
    model: &SourceModel,
    rv: &RateVector,
    spec: &DistortionSpec,
    cfg: &SearchConfig,
) -> Result<MembershipReport> {
    if rv.len() != model.l() {
        return Err(Error::DimensionMismatch {
            what: "rate vector",
            expected: model.l().to_string(),
            found: rv.len().to_string(),
        });
    }
    if let Some(gamma) = spec.gamma() {
        check_gamma(gamma, model.k())?;
    }
    let search = match Search::new(model, spec) {
        Ok(s) => s,
        Err(Error::InfeasibleSpec(_)) => {
            return Ok(MembershipReport {
                inner: None,
                outer: None,
                inner_margin: f64::INFINITY,
                outer_margin: f64::INFINITY,
            })
        }
        Err(e) => return Err(e),
    };
    let l = model.l();
    let margin = |t: &[f64], variant: &dyn Fn(&[f64]) -> Variant| -> f64 {
        let r: Vec<f64> = t.iter().map(|&t| fraction_to_rate(t)).collect();
        let Ok(logdets) = restricted_logdets(model, &search.u(t)) else {
            return f64::INFINITY;
        };
        let values = subset_values(&r, &logdets, variant(t));
        nonempty_subsets(l)
            .map(|s| values[s.mask() as usize] - rv.subset_sum(s))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let theta_at = |t: &[f64]| search.outer_ln_theta(t).exp();

    let inner = search.run(|t| margin(t, &|_| Variant::Upper), cfg, &[]);
    let outer = search.run(
        |t| {
            let theta = theta_at(t);
            if !(theta > 0.0 && theta.is_finite()) {
                return f64::INFINITY;
            }
            margin(t, &|_| Variant::Lower { theta })
        },
        cfg,
        &[],
    );
    let (inner, outer) = match (inner, outer) {
        (Ok(i), Ok(o)) => (i, o),
        (Err(Error::InfeasibleSpec(_)), _) | (_, Err(Error::InfeasibleSpec(_))) => {
            return Ok(MembershipReport {
                inner: None,
                outer: None,
                inner_margin: f64::NAN,
                outer_margin: f64::NAN,
            })
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let outer_t: Vec<f64> = outer.r.as_slice().iter().map(|&r| rate_to_fraction(r)).collect();
    Ok(MembershipReport {
        inner: (inner.value <= CERTIFY_TOL).then(|| inner.r.clone()),
        outer: (outer.value <= CERTIFY_TOL).then(|| (outer.r.clone(), theta_at(&outer_t))),
        inner_margin: inner.value,
        outer_margin: outer.value,
    })
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

    fn half() -> RateAllocation {
        RateAllocation::uniform(2, 0.5 * 2f64.ln()).unwrap()
    }

    fn both() -> Subset {
        Subset::full(2)
    }

    fn first() -> Subset {
        Subset::from_indices(&[0])
    }

    #[test]
    fn j_lower_examples() {
        let m = m1();
        assert!((j_lower(&m, both(), 0.5, &half()).unwrap() - 0.5 * 8f64.ln()).abs() < 1e-12);
        assert_eq!(j_lower(&m, both(), 1.0, &RateAllocation::zeros(2)).unwrap(), 0.0);
        assert!((j_lower(&m, first(), 0.5, &half()).unwrap() - 0.5 * (8.0f64 / 3.0).ln()).abs() < 1e-12);
        assert_eq!(j_lower(&m, Subset::EMPTY, 0.5, &half()), Err(Error::EmptySubset));
        assert_eq!(j_lower(&m, both(), 0.0, &half()), Err(Error::NonpositiveTheta(0.0)));
    }

    #[test]
    fn j_upper_examples() {
        let m = m1();
        assert!((j_upper(&m, both(), &half()).unwrap() - 1.5 * 2f64.ln()).abs() < 1e-12);
        assert!((j_upper(&m, first(), &half()).unwrap() - 0.5 * (8.0f64 / 3.0).ln()).abs() < 1e-12);
        let r = RateAllocation::new(vec![0.0, 0.7]).unwrap();
        assert_eq!(j_upper(&m, first(), &r).unwrap(), 0.0);
    }

    #[test]
    fn feasible_examples() {
        let m = m1();
        let sd = DistortionSpec::Matrix(dmatrix![0.5]);
        assert!(feasible(&m, &sd, &half()).unwrap());
        assert!(!feasible(&m, &sd, &RateAllocation::zeros(2)).unwrap());
        assert!(feasible(&m, &DistortionSpec::sum(dmatrix![1.0], 0.5), &half()).unwrap());
        assert!(matches!(
            feasible(&m, &DistortionSpec::Matrix(Matrix::identity(2, 2)), &half()),
            Err(Error::SpecDimensionMismatch { .. })
        ));
    }

    #[test]
    fn polyhedron_examples() {
        let m = m1();
        let rv = RateVector::new(vec![0.52, 0.52]).unwrap();
        assert!(polyhedron_contains(&m, &rv, &half(), Some(0.5)).unwrap());
        let rv = RateVector::new(vec![0.52, 0.51]).unwrap();
        assert!(!polyhedron_contains(&m, &rv, &half(), Some(0.5)).unwrap());
        let rv = RateVector::new(vec![0.0, 0.0]).unwrap();
        assert!(polyhedron_contains(&m, &rv, &RateAllocation::zeros(2), Some(1.0)).unwrap());
    }

    #[test]
    fn copolymatroid_examples() {
        let m = m1();
        assert!(copolymatroid_violations(&m, &half(), Variant::Upper)
            .unwrap()
            .is_empty());
        assert!(copolymatroid_violations(&m, &RateAllocation::zeros(2), Variant::Upper)
            .unwrap()
            .is_empty());
        assert!(copolymatroid_violations(&m, &half(), Variant::Lower { theta: 0.5 })
            .unwrap()
            .is_empty());
        let f = SubsetFunction::new(2, vec![0.0, 1.0, 1.0, 1.5]).unwrap();
        assert!(set_function_violations(&f)
            .iter()
            .any(|v| matches!(v, Violation::NotSupermodular { .. })));
    }

    #[test]
    fn sum_rate_inner_examples() {
        let cfg = SearchConfig::default();
        let g = dmatrix![1.0];
        let s = sum_rate_inner(&m1(), &DistortionSpec::sum(g.clone(), 0.5), &cfg).unwrap();
        assert!((s.value - 1.5 * 2f64.ln()).abs() < 1e-7, "{s:?}");
        for &r in s.r.as_slice() {
            assert!((r - 0.5 * 2f64.ln()).abs() < 1e-3);
        }
        let s = sum_rate_inner(&m1(), &DistortionSpec::sum(g.clone(), 1.0), &cfg).unwrap();
        assert_eq!(s.value, 0.0);
        assert!(matches!(
            sum_rate_inner(&m1(), &DistortionSpec::sum(g, 1.0 / 3.0), &cfg),
            Err(Error::InfeasibleSpec(_))
        ));
    }

    #[test]
    fn sum_rate_outer_examples() {
        let cfg = SearchConfig::default();
        let g = dmatrix![1.0];
        let s = sum_rate_outer(&m1(), &DistortionSpec::sum(g.clone(), 0.5), &cfg).unwrap();
        assert!((s.value - 1.5 * 2f64.ln()).abs() < 1e-7, "{s:?}");
        let s = sum_rate_outer(&m1(), &DistortionSpec::sum(g, 1.2), &cfg).unwrap();
        assert_eq!(s.value, 0.0);
        let i2 = Matrix::identity(2, 2);
        // tr Σ_{X|Y} = 0.5 + 0.2 for M2, so D = 0.7 sits exactly on the open threshold.
        assert!(matches!(
            sum_rate_bounds(&m2(), &DistortionSpec::sum(i2.clone(), 0.7), &cfg),
            Err(Error::InfeasibleSpec(_))
        ));
        let b = sum_rate_bounds(&m2(), &DistortionSpec::sum(i2, 0.75), &cfg).unwrap();
        assert!(b.outer.value <= b.inner.value + 1e-12);
        assert!(b.gap() >= 0.0);
    }

    #[test]
    fn membership_examples() {
        let cfg = SearchConfig::default();
        let m = m1();
        let sd = DistortionSpec::Matrix(dmatrix![0.5]);
        let rv = RateVector::new(vec![2.0, 2.0]).unwrap();
        let rep = membership_verdict(&m, &rv, &sd, &cfg).unwrap();
        assert!(matches!(rep.verdict(), Verdict::InnerCertified(_)));

        let zero = RateVector::new(vec![0.0, 0.0]).unwrap();
        let rep = membership_verdict(&m, &zero, &sd, &cfg).unwrap();
        match rep.verdict() {
            Verdict::ExcludedHeuristic { margin } => assert!(margin >= 0.5 * 2f64.ln()),
            v => panic!("{v:?}"),
        }

        let rep = membership_verdict(&m, &zero, &DistortionSpec::Matrix(dmatrix![1.0]), &cfg);
        let rep = rep.unwrap();
        assert_eq!(rep.inner, Some(RateAllocation::zeros(2)));
        assert!(rep.outer.is_some());
    }
}
