//! Closed-form exponent calculators for heat-kernel decay, Young's
//! convolution inequality and semigroup smoothing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::gamma;

/// One evaluated exponent formula with its inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentRecord {
    pub context: String,
    pub inputs: Vec<(String, f64)>,
    pub exponent: f64,
    pub admissible: bool,
}

/// Exponent of t in ‖∇^k G(t)‖_{L^p} ≤ C t^{e}: e = −N/2·(1−1/p) − k/2.
pub fn gaussian_decay_exponent(n: usize, p: f64, k: u32) -> f64 {
    -(n as f64) / 2.0 * (1.0 - 1.0 / p) - k as f64 / 2.0
}

/// Young's exponents: 1/q1 + 1/q2 = 1/q3 + 1.
pub fn young_triple_valid(q1: f64, q2: f64, q3: f64) -> bool {
    (1.0 / q1 + 1.0 / q2 - 1.0 / q3 - 1.0).abs() <= 1e-12
}

/// Exponent of t in ‖e^{−tA}‖_{L^r→L^m} ≤ C t^{e}: e = −N/(2s)·(1/r − 1/m).
pub fn semigroup_decay_exponent(n: usize, s: f64, r: f64, m: f64) -> Result<f64> {
    if !(r >= 1.0) || r > m {
        return Err(Error::InvalidParameter(format!("need 1 ≤ r ≤ m, got r = {r}, m = {m}")));
    }
    Ok(-(n as f64) / (2.0 * s) * (1.0 / r - 1.0 / m))
}

/// Γ(−s) = −Γ(1−s)/s.
pub fn gamma_reflection(s: f64) -> f64 {
    -gamma(1.0 - s) / s
}

impl ExponentRecord {
    pub fn gaussian(n: usize, p: f64, k: u32) -> Self {
        Self {
            context: "gaussian_decay".into(),
            inputs: vec![("N".into(), n as f64), ("p".into(), p), ("k".into(), k as f64)],
            exponent: gaussian_decay_exponent(n, p, k),
            admissible: p >= 1.0,
        }
    }

    /// Semigroup smoothing exponent; admissible when it exceeds −1, i.e.
    /// the time integral of the bound converges at 0.
    pub fn semigroup(n: usize, s: f64, r: f64, m: f64) -> Result<Self> {
        let e = semigroup_decay_exponent(n, s, r, m)?;
        Ok(Self {
            context: "semigroup_decay".into(),
            inputs: vec![
                ("N".into(), n as f64),
                ("s".into(), s),
                ("r".into(), r),
                ("m".into(), m),
            ],
            exponent: e,
            admissible: e > -1.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_kernel_exponents() {
        for n in 1..=4 {
            assert_eq!(gaussian_decay_exponent(n, 2.0, 0), -(n as f64) / 4.0);
            assert_eq!(gaussian_decay_exponent(n, 2.0, 1), -(n as f64) / 4.0 - 0.5);
            assert_eq!(gaussian_decay_exponent(n, 1.0, 0), 0.0);
        }
    }

    #[test]
    fn young_triples() {
        assert!(young_triple_valid(1.0, 2.0, 2.0));
        assert!(!young_triple_valid(2.0, 2.0, 2.0));
        for p in [2.0, 3.0, 4.0, 7.5] {
            assert!(young_triple_valid(2.0 * p / (2.0 + p), 2.0, p));
        }
    }

    #[test]
    fn semigroup_exponents() {
        assert_eq!(semigroup_decay_exponent(1, 0.5, 1.0, f64::INFINITY).unwrap(), -1.0);
        assert_eq!(semigroup_decay_exponent(3, 0.3, 2.5, 2.5).unwrap(), 0.0);
        assert!(semigroup_decay_exponent(1, 0.5, 3.0, 2.0).is_err());
        // p > N/(2s) makes the L^p → L^∞ bound integrable at 0
        let rec = ExponentRecord::semigroup(3, 0.5, 4.0, f64::INFINITY).unwrap();
        assert!(rec.admissible && rec.exponent > -1.0);
        let below = ExponentRecord::semigroup(3, 0.5, 2.0, f64::INFINITY).unwrap();
        assert!(!below.admissible);
    }

    #[test]
    fn gamma_of_negative_order() {
        assert!((gamma_reflection(0.5) + 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-13);
        for s in [0.1, 0.25, 0.5, 0.75, 0.9] {
            assert!((s * gamma_reflection(s) + gamma(1.0 - s)).abs() < 1e-12);
        }
        // mpmath: gamma(-0.25)
        assert!((gamma_reflection(0.25) + 4.901_666_809_860_711).abs() < 1e-12);
    }
}
