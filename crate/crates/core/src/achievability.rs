//! Gaussian test channels `U_i = Y_i + V_i`, the linear MMSE estimate of `X`
//! from them, Berger–Tung mutual informations and a Monte Carlo check of
//! the resulting error covariance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauss_model::{RateAllocation, SourceModel};
use crate::linalg::{self, Matrix};
use crate::rate_region::{self, RateVector, Variant};
use crate::subset::Subset;

/// Test channels for one rate allocation. Channels with `r_i = 0` carry no
/// information (`U_i ≡ 0`) and are dropped from every joint covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct TestChannel {
    model: SourceModel,
    r: RateAllocation,
    active: Vec<usize>,
    /// `Var V_i = σ²_i / (e^{2 r_i} - 1)` for active channels.
    v_var: Vec<f64>,
    /// `K × L` linear estimator; zero columns for inactive channels.
    estimator: Matrix,
}

impl TestChannel {
    pub fn new(model: &SourceModel, r: &RateAllocation) -> Result<Self> {
        model.check_rates(r)?;
        let active: Vec<usize> = (0..model.l()).filter(|&i| r.as_slice()[i] > 0.0).collect();
        let v_var: Vec<f64> = active
            .iter()
            .map(|&i| model.noise_var()[i] / (2.0 * r.as_slice()[i]).exp_m1())
            .collect();
        let (cross, cov_u) = joint_blocks(model, &active, &v_var);
        let mut estimator = Matrix::zeros(model.k(), model.l());
        if !active.is_empty() {
            let w = cross * linalg::spd_inverse(&cov_u, "test channel covariance")?;
            for (c, &i) in active.iter().enumerate() {
                estimator.set_column(i, &w.column(c));
            }
        }
        Ok(TestChannel {
            model: model.clone(),
            r: r.clone(),
            active,
            v_var,
            estimator,
        })
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn estimator(&self) -> &Matrix {
        &self.estimator
    }

    pub fn rates(&self) -> &RateAllocation {
        &self.r
    }

    /// `Σ_X - Cov(X, U) Cov(U)^{-1} Cov(U, X)` over active channels.
    pub fn error_covariance(&self) -> Result<Matrix> {
        let sx = self.model.sigma_x();
        if self.active.is_empty() {
            return Ok(sx.clone());
        }
        let (cross, cov_u) = joint_blocks(&self.model, &self.active, &self.v_var);
        let explained = &cross * linalg::spd_inverse(&cov_u, "test channel covariance")? * cross.transpose();
        Ok(linalg::symmetrize(&(sx - explained)))
    }
}

/// `Cov(X, U_act)` and `Cov(U_act)` with `U_i = a_i X + N_i + V_i`.
fn joint_blocks(model: &SourceModel, active: &[usize], v_var: &[f64]) -> (Matrix, Matrix) {
    let a_act = Matrix::from_fn(active.len(), model.k(), |r, c| model.a()[(active[r], c)]);
    let cross = model.sigma_x() * a_act.transpose();
    let mut cov_u = &a_act * model.sigma_x() * a_act.transpose();
    for (c, &i) in active.iter().enumerate() {
        cov_u[(c, c)] += model.noise_var()[i] + v_var[c];
    }
    (cross, linalg::symmetrize(&cov_u))
}

/// Error covariance of the linear estimate from the test channels, via the
/// Schur complement of the joint `(X, U)` covariance.
pub fn test_channel_distortion(model: &SourceModel, r: &RateAllocation) -> Result<Matrix> {
    TestChannel::new(model, r)?.error_covariance()
}

/// `I(U_S; Y_S | U_{S^c})` from log-determinants of the joint `(Y, U)` covariance.
pub fn berger_tung_mutual_info(model: &SourceModel, s: Subset, r: &RateAllocation) -> Result<f64> {
    model.check_rates(r)?;
    s.check(model.l())?;
    let l = model.l();
    let rates = r.as_slice();
    let active = |i: usize| rates[i] > 0.0;
    let u_s: Vec<usize> = s.members().filter(|&i| active(i)).collect();
    if u_s.is_empty() {
        return Ok(0.0);
    }
    let u_c: Vec<usize> = s.complement(l).members().filter(|&i| active(i)).collect();
    let y_s: Vec<usize> = s.members().collect();

    let sigma_y =
        linalg::symmetrize(&(model.a() * model.sigma_x() * model.a().transpose() + linalg::diag(model.noise_var())));
    let v_var = |i: usize| model.noise_var()[i] / (2.0 * rates[i]).exp_m1();

    // Variables are tagged (is_u, index); Cov(Y_i, U_j) = Cov(Y_i, Y_j).
    let logdet = |vars: &[(bool, usize)]| -> Result<f64> {
        if vars.is_empty() {
            return Ok(0.0);
        }
        let m = Matrix::from_fn(vars.len(), vars.len(), |p, q| {
            let ((pu, i), (qu, j)) = (vars[p], vars[q]);
            let mut c = sigma_y[(i, j)];
            if pu && qu && i == j {
                c += v_var(i);
            }
            c
        });
        linalg::spd_logdet(&m, "joint covariance")
    };
    let tag = |u: bool, idx: &[usize]| -> Vec<(bool, usize)> { idx.iter().map(|&i| (u, i)).collect() };
    let a = tag(true, &u_s);
    let b = tag(false, &y_s);
    let c = tag(true, &u_c);
    let ac: Vec<_> = a.iter().chain(&c).cloned().collect();
    let bc: Vec<_> = b.iter().chain(&c).cloned().collect();
    let abc: Vec<_> = a.iter().chain(&b).chain(&c).cloned().collect();
    let info = 0.5 * (logdet(&ac)? + logdet(&bc)? - logdet(&c)? - logdet(&abc)?);
    Ok(info.max(0.0))
}

/// Empirical error covariance and the per-entry standard error scale.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarlo {
    pub samples: usize,
    pub empirical: Matrix,
    /// `√((S_jj S_kk + S_jk²)/n)` with `S` the empirical matrix.
    pub std_error: Matrix,
}

const BATCH: usize = 4096;

/// Simulates `n` draws of `(X, N, V)`, applies the estimator and averages
/// `(X - X̂)(X - X̂)ᵀ`. Batch `b` uses its own ChaCha8 stream keyed by
/// `(seed, b)` and batch sums are combined in batch order with compensated
/// summation, so the result does not depend on the thread count.
pub fn monte_carlo_distortion(model: &SourceModel, r: &RateAllocation, n: usize, seed: u64) -> Result<MonteCarlo> {
    if n < 2 {
        return Err(Error::BadSampleCount(n));
    }
    let ch = TestChannel::new(model, r)?;
    let k = model.k();
    let l = model.l();
    let chol = nalgebra::Cholesky::new(model.sigma_x().clone())
        .ok_or(Error::NotPositiveDefinite("sigma_x"))?
        .l();
    let noise_sd: Vec<f64> = model.noise_var().iter().map(|v| v.sqrt()).collect();
    let mut v_sd = vec![0.0; l];
    for (c, &i) in ch.active.iter().enumerate() {
        v_sd[i] = ch.v_var[c].sqrt();
    }

    let batches = n.div_ceil(BATCH);
    let partial: Vec<Matrix> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BATCH.min(n - b * BATCH);
            let mut acc = Matrix::zeros(k, k);
            let mut z = nalgebra::DVector::<f64>::zeros(k);
            let mut u = nalgebra::DVector::<f64>::zeros(l);
            for _ in 0..count {
                for zi in z.iter_mut() {
                    *zi = rng.sample(StandardNormal);
                }
                let x = &chol * &z;
                let ax = model.a() * &x;
                for i in 0..l {
                    let noise: f64 = rng.sample::<f64, _>(StandardNormal) * noise_sd[i];
                    let v: f64 = rng.sample::<f64, _>(StandardNormal) * v_sd[i];
                    u[i] = ax[i] + noise + v;
                }
                let err = &x - ch.estimator() * &u;
                acc += &err * err.transpose();
            }
            acc
        })
        .collect();

    let mut sum = Matrix::zeros(k, k);
    let mut comp = Matrix::zeros(k, k);
    for m in &partial {
        for idx in 0..k * k {
            let y = m[idx] - comp[idx];
            let t = sum[idx] + y;
            comp[idx] = (t - sum[idx]) - y;
            sum[idx] = t;
        }
    }
    let empirical = sum / n as f64;
    let std_error = Matrix::from_fn(k, k, |j, m| {
        ((empirical[(j, j)] * empirical[(m, m)] + empirical[(j, m)].powi(2)) / n as f64).sqrt()
    });
    Ok(MonteCarlo {
        samples: n,
        empirical,
        std_error,
    })
}

/// Vertex of the inner polyhedron reached by adding observations in `order`:
/// `R_{π(k)} = J_{{π(1..k)}} - J_{{π(1..k-1)}}`.
pub fn greedy_corner(model: &SourceModel, r: &RateAllocation, order: &[usize]) -> Result<RateVector> {
    let l = model.l();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..l).collect::<Vec<_>>() {
        return Err(Error::InvalidParameter(
            "order must be a permutation of the observations".into(),
        ));
    }
    let f = rate_region::subset_function(model, r, Variant::Upper)?;
    let mut rates = vec![0.0; l];
    let mut prefix = Subset::EMPTY;
    for &i in order {
        let next = prefix.with(i);
        rates[i] = (f.value(next) - f.value(prefix)).max(0.0);
        prefix = next;
    }
    RateVector::new(rates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate_region::j_upper;
    use nalgebra::dmatrix;

    fn m1() -> SourceModel {
        SourceModel::new(dmatrix![1.0], dmatrix![1.0; 1.0], vec![1.0, 1.0]).unwrap()
    }

    fn half() -> RateAllocation {
        RateAllocation::uniform(2, 0.5 * 2f64.ln()).unwrap()
    }

    #[test]
    fn distortion_examples() {
        let d = test_channel_distortion(&m1(), &half()).unwrap();
        assert!((d[(0, 0)] - 0.5).abs() < 1e-12);
        let m = SourceModel::new(dmatrix![2.0, 0.4; 0.4, 1.0], dmatrix![1.0, 0.5], vec![0.3]).unwrap();
        let d = test_channel_distortion(&m, &RateAllocation::zeros(1)).unwrap();
        assert_eq!(&d, m.sigma_x());
        let m2 = SourceModel::new(Matrix::identity(2, 2), Matrix::identity(2, 2), vec![1.0, 0.25]).unwrap();
        let d = test_channel_distortion(&m2, &half()).unwrap();
        assert!((d - dmatrix![2.0 / 3.0, 0.0; 0.0, 1.0 / 3.0]).abs().max() < 1e-12);
    }

    #[test]
    fn mutual_info_examples() {
        let m = m1();
        let full = Subset::full(2);
        assert!((berger_tung_mutual_info(&m, full, &half()).unwrap() - 0.5 * 8f64.ln()).abs() < 1e-12);
        assert_eq!(berger_tung_mutual_info(&m, Subset::EMPTY, &half()).unwrap(), 0.0);
        let one = Subset::from_indices(&[0]);
        let got = berger_tung_mutual_info(&m, one, &half()).unwrap();
        assert!((got - 0.5 * (8.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((got - j_upper(&m, one, &half()).unwrap()).abs() < 1e-12);
        let partial = RateAllocation::new(vec![0.0, 0.6]).unwrap();
        for s in crate::subset::nonempty_subsets(2) {
            let bt = berger_tung_mutual_info(&m, s, &partial).unwrap();
            assert!((bt - j_upper(&m, s, &partial).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn monte_carlo_examples() {
        let n = 100_000;
        let mc = monte_carlo_distortion(&m1(), &half(), n, 42).unwrap();
        let tol = 3.0 * 2f64.sqrt() * 0.5 / (n as f64).sqrt();
        assert!((mc.empirical[(0, 0)] - 0.5).abs() < tol, "{mc:?}");

        let m = SourceModel::new(dmatrix![2.0, 0.4; 0.4, 1.0], dmatrix![1.0, 0.5], vec![0.3]).unwrap();
        let mc = monte_carlo_distortion(&m, &RateAllocation::zeros(1), n, 7).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                assert!((mc.empirical[(j, k)] - m.sigma_x()[(j, k)]).abs() < 3.0 * mc.std_error[(j, k)] + 1e-12);
            }
        }
        assert_eq!(
            monte_carlo_distortion(&m1(), &half(), 1, 0),
            Err(Error::BadSampleCount(1))
        );
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let a = monte_carlo_distortion(&m1(), &half(), 10_000, 5).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| monte_carlo_distortion(&m1(), &half(), 10_000, 5).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn greedy_corner_sits_in_polyhedron() {
        let m = m1();
        let rv = greedy_corner(&m, &half(), &[1, 0]).unwrap();
        assert!((rv.as_slice()[1] - 0.5 * (8.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((rv.as_slice().iter().sum::<f64>() - 1.5 * 2f64.ln()).abs() < 1e-12);
        assert!(rate_region::polyhedron_contains(&m, &rv, &half(), None).unwrap());
    }
}
