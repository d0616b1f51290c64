//! Closed-form references for two terminals observing unit-variance
//! sources with correlation `ρ`: the one-helps-one region and the optimal
//! sum rate under per-terminal distortions.

use crate::error::{Error, Result};
use crate::rate_region::RateVector;

/// `Σ_Y = [[1, ρ], [ρ, 1]]` with distortion targets `(D₁, D₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoTerminalInstance {
    rho: f64,
    d1: f64,
    d2: f64,
}

impl TwoTerminalInstance {
    pub fn new(rho: f64, d1: f64, d2: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!(
                "correlation must lie in [0, 1), got {rho}"
            )));
        }
        for d in [d1, d2] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidParameter(format!("distortion must be positive, got {d}")));
            }
        }
        Ok(TwoTerminalInstance { rho, d1, d2 })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }
}

/// `max{D₁, D₂} ≤ min{1, ρ² min{D₁, D₂} + 1 - ρ²}`, boundary included.
pub fn in_wagner_d(inst: &TwoTerminalInstance) -> bool {
    let rho2 = inst.rho * inst.rho;
    let hi = inst.d1.max(inst.d2);
    let cap = 1f64.min(rho2 * inst.d1.min(inst.d2) + 1.0 - rho2);
    hi <= cap + 1e-12
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WagnerSumRate {
    pub beta_star: f64,
    /// Nats.
    pub rate: f64,
}

/// `½ log[(1 - ρ²) β*/2 / (D₁ D₂)]` with `β* = 1 + √(1 + 4ρ² D₁D₂ / (1 - ρ²)²)`.
pub fn wagner_sum_rate(inst: &TwoTerminalInstance) -> Result<WagnerSumRate> {
    if !in_wagner_d(inst) {
        return Err(Error::OutsideD {
            rho: inst.rho,
            d1: inst.d1,
            d2: inst.d2,
        });
    }
    let rho2 = inst.rho * inst.rho;
    let one_minus = 1.0 - rho2;
    let prod = inst.d1 * inst.d2;
    let beta_star = 1.0 + (1.0 + 4.0 * rho2 * prod / (one_minus * one_minus)).sqrt();
    let rate = (0.5 * (one_minus * beta_star / 2.0 / prod).ln()).max(0.0);
    Ok(WagnerSumRate { beta_star, rate })
}

/// Terminal whose distortion is constrained in the one-helps-one setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    First,
    Second,
}

impl Terminal {
    fn index(self) -> usize {
        match self {
            Terminal::First => 0,
            Terminal::Second => 1,
        }
    }
}

/// Smallest `R_i` compatible with helper rate `r_helper`:
/// `½ log⁺[(1 - ρ²)(1/D_i)(1 + ρ²/(1 - ρ²) s)]` at `s = e^{-2 r_helper}`.
pub fn oho_bound(rho: f64, d_i: f64, r_helper: f64) -> f64 {
    let rho2 = rho * rho;
    let s = (-2.0 * r_helper.max(0.0)).exp().clamp(f64::MIN_POSITIVE, 1.0);
    (0.5 * ((1.0 - rho2) / d_i * (1.0 + rho2 / (1.0 - rho2) * s)).ln()).max(0.0)
}

/// Membership in the one-helps-one region where terminal `i` must meet `D_i`
/// and the other terminal only helps. The bound grows with `s`, so the best
/// admissible `s` is `e^{-2 R_helper}` and no search is needed.
pub fn oho_region_contains(rho: f64, i: Terminal, d_i: f64, rv: &RateVector) -> Result<bool> {
    if rv.len() != 2 {
        return Err(Error::DimensionMismatch {
            what: "rate vector",
            expected: "2".into(),
            found: rv.len().to_string(),
        });
    }
    if !(0.0..1.0).contains(&rho) || !(d_i > 0.0) {
        return Err(Error::InvalidParameter("need 0 ≤ ρ < 1 and D_i > 0".into()));
    }
    let r = rv.as_slice();
    let own = r[i.index()];
    let helper = r[1 - i.index()];
    Ok(own >= oho_bound(rho, d_i, helper) - 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(rho: f64, d1: f64, d2: f64) -> TwoTerminalInstance {
        TwoTerminalInstance::new(rho, d1, d2).unwrap()
    }

    #[test]
    fn wagner_d_examples() {
        assert!(in_wagner_d(&inst(0.5, 0.2, 0.2)));
        assert!(in_wagner_d(&inst(0.5, 1.0, 1.0)));
        assert!(!in_wagner_d(&inst(0.0, 0.5, 1.2)));
    }

    #[test]
    fn wagner_sum_rate_examples() {
        // Reference values from evaluating the closed form in double precision.
        let w = wagner_sum_rate(&inst(0.5, 0.2, 0.2)).unwrap();
        assert!((w.beta_star - 2.034_944_979_750_668_5).abs() < 1e-12);
        assert!((w.rate - 1.474_257_676_703_984).abs() < 1e-12);
        assert_eq!(wagner_sum_rate(&inst(0.5, 1.0, 1.0)).unwrap().rate, 0.0);
        let w = wagner_sum_rate(&inst(0.5, 0.75, 0.75)).unwrap();
        assert!((w.beta_star - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!((w.rate - 0.237_954_239_455_689_28).abs() < 1e-12);
        assert!(matches!(
            wagner_sum_rate(&inst(0.0, 0.5, 1.2)),
            Err(Error::OutsideD { .. })
        ));
    }

    #[test]
    fn oho_examples() {
        let d1 = 0.3f64;
        let at_zero = RateVector::new(vec![0.5 * (1.0 / d1).ln(), 0.0]).unwrap();
        assert!(oho_region_contains(0.6, Terminal::First, d1, &at_zero).unwrap());
        let below = RateVector::new(vec![0.5 * (1.0 / d1).ln() - 1e-6, 0.0]).unwrap();
        assert!(!oho_region_contains(0.6, Terminal::First, d1, &below).unwrap());

        for helper in [0.0, 0.3, 5.0] {
            let rv = RateVector::new(vec![helper, 0.5 * 4f64.ln()]).unwrap();
            assert!(oho_region_contains(0.0, Terminal::Second, 0.25, &rv).unwrap());
        }

        let rv = RateVector::new(vec![0.9, 0.35]).unwrap();
        assert!(oho_region_contains(0.5, Terminal::First, 0.2, &rv).unwrap());
        assert!((oho_bound(0.5, 0.2, 0.35) - 0.737_465_208_043_567_3).abs() < 1e-12);
    }
}
