#![allow(dead_code)]

use gaussian_ceo::duality::DirectModel;
use gaussian_ceo::{Matrix, RateAllocation, SourceModel};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `Σ_X = G Gᵀ / k + 0.2 I` keeps the covariance comfortably positive definite.
pub fn model_from_parts(k: usize, l: usize, g: &[f64], a: &[f64], noise: &[f64]) -> SourceModel {
    let g = Matrix::from_row_slice(k, k, g);
    let sigma_x = &g * g.transpose() / k as f64 + Matrix::identity(k, k) * 0.2;
    let mut a = Matrix::from_row_slice(l, k, a);
    for mut row in a.row_iter_mut() {
        if row.norm() < 0.1 {
            row[0] += 0.5;
        }
    }
    SourceModel::new(sigma_x, a, noise.to_vec()).unwrap()
}

pub fn random_model(rng: &mut ChaCha8Rng, max_k: usize, max_l: usize) -> SourceModel {
    let k = rng.random_range(1..=max_k);
    let l = rng.random_range(1..=max_l);
    let g: Vec<f64> = (0..k * k).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a: Vec<f64> = (0..l * k).map(|_| rng.random_range(-1.0..1.0)).collect();
    let noise: Vec<f64> = (0..l).map(|_| rng.random_range(0.2..2.0)).collect();
    model_from_parts(k, l, &g, &a, &noise)
}

pub fn random_rates(rng: &mut ChaCha8Rng, l: usize, max: f64) -> RateAllocation {
    RateAllocation::new((0..l).map(|_| rng.random_range(0.0..max)).collect()).unwrap()
}

/// `I + 0.3·noise`, far from singular.
pub fn random_gamma(rng: &mut ChaCha8Rng, k: usize) -> Matrix {
    Matrix::identity(k, k) + Matrix::from_fn(k, k, |_, _| rng.random_range(-0.3..0.3) / k as f64)
}

pub fn random_direct(rng: &mut ChaCha8Rng, max_l: usize) -> DirectModel {
    let l = rng.random_range(1..=max_l);
    let g = Matrix::from_fn(l, l, |_, _| rng.random_range(-1.0..1.0));
    let sigma_x = &g * g.transpose() / l as f64 + Matrix::identity(l, l) * 0.2;
    let noise: Vec<f64> = (0..l).map(|_| rng.random_range(0.1..1.5)).collect();
    DirectModel::new(sigma_x, noise).unwrap()
}
