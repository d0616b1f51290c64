mod common;

use common::{random_direct, random_gamma};
use gaussian_ceo::duality::{convert_spec, direct_sum_rate_inner};
use gaussian_ceo::optim::SearchConfig;
use gaussian_ceo::rate_region::sum_rate_inner;
use gaussian_ceo::two_terminal::{wagner_sum_rate, TwoTerminalInstance};
use gaussian_ceo::{DistortionSpec, Matrix};
use nalgebra::dmatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn direct_and_converted_sum_rates_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let cfg = SearchConfig::default();
    for _ in 0..8 {
        let dm = random_direct(&mut rng, 3);
        let l = dm.l();
        let gamma = random_gamma(&mut rng, l);
        let floor = (&gamma
            * dm.error_covariance(&gaussian_ceo::RateAllocation::uniform(l, 3.0).unwrap())
                .unwrap()
            * gamma.transpose())
        .trace();
        let spec = DistortionSpec::sum(gamma, floor * rng.random_range(1.5..4.0));
        let direct = direct_sum_rate_inner(&dm, &spec, &cfg).unwrap();
        let (remote, converted) = convert_spec(&dm, &spec).unwrap();
        let via_remote = sum_rate_inner(&remote, &converted, &cfg).unwrap();
        assert!(
            (direct.value - via_remote.value).abs() < 1e-8,
            "{} vs {}",
            direct.value,
            via_remote.value
        );
    }
}

#[test]
fn two_terminal_direct_path_matches_closed_form() {
    let cfg = SearchConfig::default();
    let eps = 1e-4;
    for (rho, d1, d2) in [(0.5, 0.2, 0.2), (0.7, 0.3, 0.4), (0.3, 0.5, 0.6)] {
        let dm =
            gaussian_ceo::duality::DirectModel::new(dmatrix![1.0 - eps, rho; rho, 1.0 - eps], vec![eps, eps]).unwrap();
        let spec = DistortionSpec::vector(Matrix::identity(2, 2), vec![d1, d2]);
        let direct = direct_sum_rate_inner(&dm, &spec, &cfg).unwrap();
        let closed = wagner_sum_rate(&TwoTerminalInstance::new(rho, d1, d2).unwrap()).unwrap();
        assert!(
            (direct.value - closed.rate).abs() < 1e-3,
            "{} vs {}",
            direct.value,
            closed.rate
        );
    }
}
