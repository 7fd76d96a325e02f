//! Truncated random Lerch series `∑_{n<N} e(λn) ω(n) (n+α)^{-s}` with
//! Haar-distributed phases `ω(n)`.
//!
//! Phases come from a counter-based ChaCha20 stream: `ω(n)` depends only on
//! `(seed, n)`, so any index can be regenerated in isolation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::lerch::{tail::twisted_power, CompensatedSum, LerchParameters, StripPoint};

/// One point of the torus, truncated to `N` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSequence {
    phases: Vec<Complex64>,
    seed: u64,
}

impl PhaseSequence {
    /// Wrap explicit phases; each must have unit modulus within 1e-14.
    pub fn from_phases(phases: Vec<Complex64>, seed: u64) -> Result<Self> {
        if let Some(bad) = phases.iter().find(|w| (w.norm() - 1.0).abs() > 1e-14) {
            return Err(LabError::InvalidParameter(format!(
                "phase {bad} is not on the unit circle"
            )));
        }
        Ok(PhaseSequence { phases, seed })
    }

    /// All phases equal to one.
    pub fn identity(n: usize) -> Self {
        PhaseSequence {
            phases: vec![Complex64::new(1.0, 0.0); n],
            seed: 0,
        }
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Multiply every phase by the same unit number.
    pub fn rotated(&self, by: Complex64) -> Result<Self> {
        Self::from_phases(self.phases.iter().map(|w| w * by).collect(), self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSeriesConfig {
    pub truncation: usize,
    pub params: LerchParameters,
}

impl RandomSeriesConfig {
    pub fn new(truncation: usize, params: LerchParameters) -> Result<Self> {
        if truncation == 0 {
            return Err(LabError::InvalidParameter("truncation N must be >= 1".into()));
        }
        Ok(RandomSeriesConfig { truncation, params })
    }
}

/// Angle of `ω(n)` in `[0, 2π)`: the `n`-th 64-bit word of the stream,
/// reduced to 53 bits.
pub fn phase_angle(seed: u64, n: u64) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * n as u128);
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * PI * u
}

pub fn sample_phases(seed: u64, n: usize) -> Result<PhaseSequence> {
    if n == 0 {
        return Err(LabError::InvalidParameter("N must be >= 1".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scale = 1.0 / (1u64 << 53) as f64;
    let phases = (0..n)
        .map(|_| {
            let theta = 2.0 * PI * (rng.next_u64() >> 11) as f64 * scale;
            Complex64::new(theta.cos(), theta.sin())
        })
        .collect();
    Ok(PhaseSequence { phases, seed })
}

/// `∑_{n=0}^{N-1} e(λn) ω(n) (n+α)^{-s}`. With all phases one this is
/// bit-identical to the partial sum of `eval_series`.
pub fn eval_random_series(s: StripPoint, cfg: &RandomSeriesConfig, omega: &PhaseSequence) -> Result<Complex64> {
    if !(s.sigma > 0.5) {
        return Err(LabError::Domain {
            sigma: s.sigma,
            t: s.t,
            reason: "the random model needs Re s > 1/2".into(),
        });
    }
    if omega.len() < cfg.truncation {
        return Err(LabError::Truncation {
            available: omega.len(),
            needed: cfg.truncation,
        });
    }
    let z = s.to_complex();
    let (alpha, lambda) = (cfg.params.alpha(), cfg.params.lambda());
    let mut acc = CompensatedSum::default();
    for (n, w) in omega.phases[..cfg.truncation].iter().enumerate() {
        let (term, _) = twisted_power(alpha, lambda, n as u64, z);
        acc.add(term * w);
    }
    Ok(acc.value())
}

/// `(∑_{n≥N} (n+α)^{-2σ})^{1/2}`, bounded by `∫_{N-1}^∞ (x+α)^{-2σ} dx`.
pub fn tail_estimate(cfg: &RandomSeriesConfig, s: StripPoint) -> Result<f64> {
    if !(s.sigma > 0.5) {
        return Err(LabError::Domain {
            sigma: s.sigma,
            t: s.t,
            reason: "the L2 tail is finite only for Re s > 1/2".into(),
        });
    }
    let e = 2.0 * s.sigma - 1.0;
    let x = cfg.truncation as f64 - 1.0 + cfg.params.alpha();
    Ok((x.powf(-e) / e).sqrt())
}

/// `∑_{n<N} (n+α)^{-2σ}`, the mean square of the truncated model.
pub fn second_moment(cfg: &RandomSeriesConfig, sigma: f64) -> f64 {
    let a = cfg.params.alpha();
    let mut acc = CompensatedSum::default();
    for n in 0..cfg.truncation {
        acc.add(Complex64::new((n as f64 + a).powf(-2.0 * sigma), 0.0));
    }
    acc.value().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lerch::eval_series;

    #[test]
    fn phases_are_unit_and_reproducible() {
        let a = sample_phases(7, 5000).unwrap();
        let b = sample_phases(7, 5000).unwrap();
        assert_eq!(a, b);
        assert!(a.phases().iter().all(|w| (w.norm() - 1.0).abs() <= 1e-14));
        assert_ne!(a, sample_phases(8, 5000).unwrap());
    }

    #[test]
    fn phases_can_be_regenerated_by_index() {
        let seq = sample_phases(11, 300).unwrap();
        for n in [0usize, 1, 17, 299] {
            let theta = phase_angle(11, n as u64);
            assert_eq!(seq.phases()[n], Complex64::new(theta.cos(), theta.sin()));
        }
    }

    #[test]
    fn identity_phases_reproduce_series_exactly() {
        let p = LerchParameters::new(0.3, 0.7).unwrap();
        let cfg = RandomSeriesConfig::new(500, p).unwrap();
        let s = StripPoint::new(1.4, -3.0);
        let v = eval_random_series(s, &cfg, &PhaseSequence::identity(500)).unwrap();
        assert_eq!(v, eval_series(s, &p, 500).unwrap().value);
    }

    #[test]
    fn single_term() {
        let p = LerchParameters::new(0.4, 0.25).unwrap();
        let cfg = RandomSeriesConfig::new(1, p).unwrap();
        let w = sample_phases(3, 1).unwrap();
        let s = StripPoint::new(0.8, 2.0);
        let v = eval_random_series(s, &cfg, &w).unwrap();
        let expected = w.phases()[0] * Complex64::new(0.4, 0.0).powc(-s.to_complex());
        assert!((v - expected).norm() < 1e-14);
    }

    #[test]
    fn short_phase_sequence_is_rejected() {
        let p = LerchParameters::new(0.4, 0.25).unwrap();
        let cfg = RandomSeriesConfig::new(10, p).unwrap();
        let w = sample_phases(3, 9).unwrap();
        assert!(matches!(
            eval_random_series(StripPoint::new(0.8, 0.0), &cfg, &w),
            Err(LabError::Truncation {
                available: 9,
                needed: 10
            })
        ));
    }

    #[test]
    fn rotating_phases_rotates_the_sum() {
        let p = LerchParameters::new(0.5, 1.0 / 3.0).unwrap();
        let cfg = RandomSeriesConfig::new(200, p).unwrap();
        let w = sample_phases(5, 200).unwrap();
        let z0 = Complex64::from_polar(1.0, 1.1);
        let s = StripPoint::new(0.7, 10.0);
        let base = eval_random_series(s, &cfg, &w).unwrap();
        let rot = eval_random_series(s, &cfg, &w.rotated(z0).unwrap()).unwrap();
        assert!((rot - z0 * base).norm() < 1e-12 * (1.0 + base.norm()));
    }

    #[test]
    fn tail_estimate_examples() {
        let one = LerchParameters::new(1.0, 1.0).unwrap();
        let t = tail_estimate(&RandomSeriesConfig::new(100, one).unwrap(), StripPoint::new(1.0, 0.0)).unwrap();
        assert!((t - (1.0f64 / 100.0).sqrt()).abs() < 1e-15);
        // terms are (n + 1)^{-2} for n >= 100
        let exact: f64 = (101..2_000_000).map(|m| (m as f64).powi(-2)).sum::<f64>() + 1.0 / 2_000_000.0;
        assert!(exact.sqrt() <= t);

        let t = tail_estimate(
            &RandomSeriesConfig::new(10_000, one).unwrap(),
            StripPoint::new(0.75, 0.0),
        )
        .unwrap();
        assert!((t - (10_000f64.powf(-0.5) / 0.5).sqrt()).abs() < 1e-12);
        assert!(t <= 0.1415);

        let mut prev = f64::INFINITY;
        for n in [1, 2, 10, 100, 1000, 100_000] {
            let t = tail_estimate(&RandomSeriesConfig::new(n, one).unwrap(), StripPoint::new(0.6, 0.0)).unwrap();
            assert!(t < prev);
            prev = t;
        }
    }
}
