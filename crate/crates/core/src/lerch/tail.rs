//! Tail expansions for `∑_{n≥M} e(λn)(n+α)^{-s}`.
//!
//! For integer λ the tail is the Hurwitz tail and is expanded with the
//! classical Euler–Maclaurin formula (integral term, half term, even
//! Bernoulli corrections). For non-integer λ the twist `z = e(λ)` is kept
//! outside the summand and the tail is expanded with the coefficients of
//! `1 / (1 - z e^u)`, which has no integral term; its remainder is bounded
//! by `∑_m |2π(λ+m)|^{-K} ∫_M^∞ |f^{(K)}|` with `f(x) = (x+α)^{-s}`.
//!
//! All coefficients are stored pre-scaled by `r^k`, where `r` is the modulus
//! of the nearest singularity of the generating function (`2π` for the
//! Bernoulli case, `2π·dist(λ, ℤ)` otherwise), so the tables never overflow.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::jet::Jet;

const TWO_PI: f64 = 2.0 * PI;

/// Largest number of Bernoulli pairs used in the Hurwitz tail.
pub const MAX_BERNOULLI_PAIRS: usize = 160;

/// `ζ(2k)` for `k = 0..=MAX_BERNOULLI_PAIRS` (index 0 unused).
fn zeta_even() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = vec![0.0; MAX_BERNOULLI_PAIRS + 1];
        table[0] = -0.5;
        table[1] = PI.powi(2) / 6.0;
        table[2] = PI.powi(4) / 90.0;
        table[3] = PI.powi(6) / 945.0;
        for (k, slot) in table.iter_mut().enumerate().skip(4) {
            let exponent = -2.0 * k as f64;
            // n^{-8} at n = 2000 is far below one ulp of ζ(2k)
            *slot = (1..2000).rev().map(|n| (n as f64).powf(exponent)).sum::<f64>();
        }
        table
    })
}

/// Scaled even Bernoulli value `B_{2k}/(2k)! · (2π)^{2k} = (-1)^{k+1} 2ζ(2k)`.
pub fn scaled_bernoulli(k: usize) -> f64 {
    let z = zeta_even()[k];
    if k % 2 == 1 {
        2.0 * z
    } else {
        -2.0 * z
    }
}

/// Fractional part of `lambda * n`, computed without the rounding error of
/// the plain product.
pub fn frac_mul(lambda: f64, n: u64) -> f64 {
    const SPLIT: f64 = 134_217_729.0; // 2^27 + 1
    let nf = n as f64;
    if n >= 1 << 27 {
        let p = lambda * nf;
        let err = lambda.mul_add(nf, -p);
        return (p.fract() + err).rem_euclid(1.0);
    }
    let c = SPLIT * lambda;
    let hi = c - (c - lambda);
    let lo = lambda - hi;
    let head = (hi * nf).fract();
    (head + lo * nf).rem_euclid(1.0)
}

/// `e(λn)(n+α)^{-s}` together with `ln(n+α)`.
#[inline]
pub fn twisted_power(alpha: f64, lambda: f64, n: u64, s: Complex64) -> (Complex64, f64) {
    let x = n as f64 + alpha;
    let l = x.ln();
    let phase = TWO_PI * frac_mul(lambda, n) - s.im * l;
    (Complex64::from_polar((-s.re * l).exp(), phase), l)
}

#[derive(Debug, Clone)]
enum Kind {
    Hurwitz,
    Twisted {
        /// `λ mod 1`, in `(0, 1)`.
        frac: f64,
        /// `a_k r^k` with `1/(1 - z e^u) = ∑ a_k u^k`.
        coeffs: Vec<Complex64>,
    },
}

/// Result of a tail expansion about `s0`.
#[derive(Debug, Clone)]
pub struct TailSum {
    /// Taylor coefficients in `δ = s - s0`; the first entry is the value.
    pub jet: Jet,
    /// Bound on the truncation remainder, uniform over `|δ| ≤ radius`.
    pub remainder: f64,
    /// Sum of moduli of the value terms, for rounding estimates.
    pub abs_sum: f64,
    /// Number of correction terms (Bernoulli pairs or twisted orders).
    pub terms: usize,
}

/// Tail written as `X^{-δ} · G(δ)`, `δ = s - s0`.
#[derive(Debug, Clone)]
pub struct FactoredTail {
    pub ln_x: f64,
    /// Taylor coefficients of `G`.
    pub factor: Jet,
    /// Bound on `|G - factor|` over `|δ| ≤ radius`.
    pub truncation: f64,
    /// Bound on the expansion remainder over `|δ| ≤ radius`.
    pub remainder: f64,
    pub abs_sum: f64,
    pub terms: usize,
}

/// `∑_{j≥n} x^j / j!` for `x ≥ 0`.
pub fn exp_tail(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let mut term = 1.0;
    for j in 1..=n {
        term *= x / j as f64;
    }
    // the ratio of successive terms is at most x/(n+1)
    let ratio = x / (n as f64 + 1.0);
    if ratio < 0.5 {
        term / (1.0 - ratio)
    } else {
        let head: f64 = (0..n)
            .scan(1.0, |t, j| {
                let cur = *t;
                *t *= x / (j as f64 + 1.0);
                Some(cur)
            })
            .sum();
        (x.exp() - head).max(term)
    }
}

/// Precomputed tail expansion for one `(α, λ)`.
#[derive(Debug, Clone)]
pub struct TailExpansion {
    alpha: f64,
    lambda: f64,
    kind: Kind,
    rate: f64,
}

impl TailExpansion {
    /// Build the expansion with room for `max_order` twisted coefficients.
    pub fn new(alpha: f64, lambda: f64, max_order: usize) -> Self {
        let frac = lambda.rem_euclid(1.0);
        if frac == 0.0 {
            return TailExpansion {
                alpha,
                lambda,
                kind: Kind::Hurwitz,
                rate: TWO_PI,
            };
        }
        let dist = frac.min(1.0 - frac);
        let rate = TWO_PI * dist;
        let z = Complex64::from_polar(1.0, TWO_PI * frac);
        let one_minus_z = Complex64::new(1.0, 0.0) - z;
        let ratio = z / one_minus_z;
        let len = max_order.max(2) + 1;
        // r^j / j!
        let mut powers = Vec::with_capacity(len);
        let mut p = 1.0;
        for j in 0..len {
            powers.push(p);
            p *= rate / (j as f64 + 1.0);
        }
        let mut coeffs: Vec<Complex64> = Vec::with_capacity(len);
        coeffs.push(one_minus_z.inv());
        for k in 1..len {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += coeffs[k - j] * powers[j];
            }
            coeffs.push(acc * ratio);
        }
        TailExpansion {
            alpha,
            lambda,
            kind: Kind::Twisted { frac, coeffs },
            rate,
        }
    }

    pub fn is_hurwitz(&self) -> bool {
        matches!(self.kind, Kind::Hurwitz)
    }

    /// Modulus of the nearest singularity of the coefficient generating
    /// function; successive tail terms shrink like `|s| / (rate · X)`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Maximum number of correction terms available.
    pub fn max_terms(&self) -> usize {
        match &self.kind {
            Kind::Hurwitz => MAX_BERNOULLI_PAIRS,
            Kind::Twisted { coeffs, .. } => coeffs.len() - 1,
        }
    }

    /// Smallest cutoff `M` for which successive correction terms shrink by
    /// at least `ratio` up to order `order`, given `|s| ≤ abs_s`.
    pub fn cutoff_for_ratio(&self, abs_s: f64, ratio: f64, order: usize) -> usize {
        let x = (abs_s + order as f64) / (self.rate * ratio);
        (x - self.alpha).ceil().max(1.0) as usize
    }

    /// Raw scaled twisted coefficient `a_k r^k`; `None` for the Hurwitz case.
    pub fn scaled_coefficient(&self, k: usize) -> Option<Complex64> {
        match &self.kind {
            Kind::Hurwitz => None,
            Kind::Twisted { coeffs, .. } => coeffs.get(k).copied(),
        }
    }

    /// Expand the tail `∑_{n≥m}` about `s0` to `order` Taylor coefficients.
    ///
    /// Terms are added until the remainder bound (uniform over
    /// `|s - s0| ≤ radius`) drops to `tol` or the table is exhausted.
    pub fn expand(&self, s0: Complex64, m: usize, order: usize, radius: f64, tol: f64) -> TailSum {
        let f = self.expand_factored(s0, m, order, radius, tol);
        TailSum {
            jet: Jet::scaled_exp(order, Complex64::new(1.0, 0.0), f.ln_x).mul(&f.factor),
            remainder: f.remainder,
            abs_sum: f.abs_sum,
            terms: f.terms,
        }
    }

    /// The tail as `X^{-δ} · G(δ)` with `X = m + α`, `δ = s - s0`.
    ///
    /// `G` is returned as a jet with `order` coefficients together with a
    /// bound on its own Taylor truncation over `|δ| ≤ radius`.
    pub fn expand_factored(&self, s0: Complex64, m: usize, order: usize, radius: f64, tol: f64) -> FactoredTail {
        let x = m as f64 + self.alpha;
        let ln_x = x.ln();
        let abs_s = s0.norm() + radius;
        let sigma = s0.re - radius;
        let x_pow = x.powf(1.0 - sigma);
        let order = order.max(1);
        match &self.kind {
            Kind::Hurwitz => self.factored_hurwitz(s0, x, ln_x, order, radius, abs_s, sigma, x_pow, tol),
            Kind::Twisted { frac, coeffs } => {
                let base_phase = TWO_PI * frac_mul(*frac, m as u64) - s0.im * ln_x;
                let base = Complex64::from_polar((-s0.re * ln_x).exp(), base_phase);
                let d = *frac;
                let dmin = d.min(1.0 - d);
                let scale = -1.0 / (x * self.rate);
                let mut poch = Jet::constant(order, base);
                let mut acc = Jet::zero(order);
                // |Π_{i<k}(s0+i)| scale^k, and ∑_{i<k} 1/|s0+i|
                let mut center_abs = base.norm();
                let mut harmonic = 0.0;
                let mut prod_abs = 1.0;
                let mut abs_sum = 0.0;
                let mut truncation = 0.0;
                let mut remainder = f64::INFINITY;
                let mut terms = 0;
                for (k, a) in coeffs.iter().enumerate() {
                    acc.add_scaled(&poch, *a);
                    let weight = a.norm() * center_abs;
                    abs_sum += weight;
                    truncation += weight * exp_tail(order, radius * harmonic);
                    terms = k + 1;
                    prod_abs *= (abs_s + k as f64) / (x * self.rate);
                    let big_k = terms as f64;
                    if terms >= 2 && sigma + big_k - 1.0 > 0.0 {
                        let c_hat = (dmin / d).powf(big_k)
                            + (dmin / (1.0 - d)).powf(big_k)
                            + 2.0 * dmin.powf(big_k) * (1.0 + 1.0 / (big_k - 1.0));
                        remainder = c_hat * prod_abs * x_pow / (sigma + big_k - 1.0);
                        if remainder <= tol {
                            break;
                        }
                    }
                    let shifted = s0 + k as f64;
                    poch.mul_linear(shifted, scale);
                    center_abs *= shifted.norm() * scale.abs();
                    harmonic += 1.0 / shifted.norm();
                }
                FactoredTail {
                    ln_x,
                    factor: acc,
                    truncation,
                    remainder,
                    abs_sum,
                    terms,
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn factored_hurwitz(
        &self,
        s0: Complex64,
        x: f64,
        ln_x: f64,
        order: usize,
        radius: f64,
        abs_s: f64,
        sigma: f64,
        x_pow: f64,
        tol: f64,
    ) -> FactoredTail {
        let one = Complex64::new(1.0, 0.0);
        let base = Complex64::from_polar((-s0.re * ln_x).exp(), -s0.im * ln_x);
        let base_abs = base.norm();
        let mut acc = Jet::reciprocal_linear(order, s0 - one);
        acc.scale(base * x);
        let pole_gap = (s0 - one).norm();
        let q = radius / pole_gap;
        let mut truncation = if q < 1.0 {
            base_abs * x / pole_gap * q.powi(order as i32) / (1.0 - q)
        } else {
            f64::INFINITY
        };
        let mut abs_sum = acc.coeffs()[0].norm() + 0.5 * base_abs;
        acc.add_constant(base * 0.5);

        let scale = 1.0 / (TWO_PI * x);
        // Π_{i<2k-1} (s+i) / (2πX), starting at k = 1
        let mut poch = Jet::constant(order, base);
        poch.mul_linear(s0, scale);
        let mut center_abs = base_abs * s0.norm() * scale;
        let mut harmonic = 1.0 / s0.norm();
        let mut prod_abs = abs_s * scale;
        let mut remainder = f64::INFINITY;
        let mut terms = 0;
        for k in 1..=MAX_BERNOULLI_PAIRS {
            let b = scaled_bernoulli(k) / TWO_PI;
            acc.add_scaled(&poch, Complex64::new(b, 0.0));
            let weight = b.abs() * center_abs;
            abs_sum += weight;
            truncation += weight * exp_tail(order, radius * harmonic);
            terms = k;
            let i = (2 * k - 1) as f64;
            prod_abs *= (abs_s + i) * scale;
            let two_k = 2.0 * k as f64;
            if sigma + two_k - 1.0 > 0.0 {
                remainder = (b * TWO_PI).abs() * prod_abs * x_pow / (sigma + two_k - 1.0);
                if remainder <= tol {
                    break;
                }
            }
            for shift in [i, i + 1.0] {
                let shifted = s0 + shift;
                poch.mul_linear(shifted, scale);
                center_abs *= shifted.norm() * scale;
                harmonic += 1.0 / shifted.norm();
            }
            prod_abs *= (abs_s + i + 1.0) * scale;
        }
        FactoredTail {
            ln_x,
            factor: acc,
            truncation,
            remainder,
            abs_sum,
            terms,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}
