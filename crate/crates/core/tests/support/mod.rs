//! Shared test support: frozen high-precision reference values and
//! independent numerical oracles. Nothing here calls into the evaluation
//! paths it is used to check, except where a helper says so.

#![allow(dead_code)]

use std::path::PathBuf;

use num_complex::Complex64;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
pub struct IdentityPoint {
    pub sigma: f64,
    pub t: f64,
    pub zeta: [f64; 2],
    pub eta: [f64; 2],
    pub hurwitz_inv_pi: [f64; 2],
    pub hurwitz_0_3: [f64; 2],
}

#[derive(Debug, Deserialize)]
pub struct LerchPoint {
    pub sigma: f64,
    pub t: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub value: [f64; 2],
}

#[derive(Debug, Deserialize)]
pub struct DerivativePoint {
    pub sigma: f64,
    pub t: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub k: usize,
    pub value: [f64; 2],
}

#[derive(Debug, Deserialize)]
pub struct Examples {
    pub zeta_0_75: f64,
    pub lerch_0_75_2i_inv_pi_third: [f64; 2],
    pub zeta_prime_2: f64,
    pub eta_prime_2: f64,
}

/// Reference values produced by `tests/oracle/generate.py` (mpmath, 40 digits).
#[derive(Debug, Deserialize)]
pub struct Oracle {
    pub alpha_inv_pi: f64,
    pub identity: Vec<IdentityPoint>,
    pub overlap: Vec<LerchPoint>,
    pub strip: Vec<LerchPoint>,
    pub derivatives: Vec<DerivativePoint>,
    pub examples: Examples,
}

pub fn c(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("data")
        .join(name)
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

pub fn oracle() -> Oracle {
    let text = std::fs::read_to_string(data_path("oracle.json")).expect("oracle.json present");
    serde_json::from_str(&text).expect("oracle.json parses")
}

/// Richardson-extrapolated central differences of order `k ∈ {1, 2}` along
/// the real direction, three levels (error O(h^6)).
pub fn richardson_derivative<F>(f: F, s: Complex64, k: usize, h: f64) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let fd = |h: f64| -> Complex64 {
        let dh = Complex64::new(h, 0.0);
        match k {
            1 => (f(s + dh) - f(s - dh)) / (2.0 * h),
            2 => (f(s + dh) - f(s) * 2.0 + f(s - dh)) / (h * h),
            _ => panic!("only first and second derivatives"),
        }
    };
    let d0 = fd(h);
    let d1 = fd(h / 2.0);
    let d2 = fd(h / 4.0);
    let r1 = (d1 * 4.0 - d0) / 3.0;
    let r2 = (d2 * 4.0 - d1) / 3.0;
    (r2 * 16.0 - r1) / 15.0
}

/// Deterministic uniform stream for test point generation (SplitMix64).
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }
}
