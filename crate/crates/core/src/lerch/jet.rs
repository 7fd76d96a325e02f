//! Truncated power series in a complex offset `δ`, used to carry
//! derivatives in `s` through the tail expansions.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Vec<Complex64>,
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        Jet {
            coeffs: vec![Complex64::new(0.0, 0.0); order.max(1)],
        }
    }

    pub fn constant(order: usize, c: Complex64) -> Self {
        let mut jet = Jet::zero(order);
        jet.coeffs[0] = c;
        jet
    }

    /// `c * exp(-δ * rate)` truncated to `order` coefficients.
    pub fn scaled_exp(order: usize, c: Complex64, rate: f64) -> Self {
        let mut jet = Jet::zero(order);
        let mut coef = c;
        for (j, slot) in jet.coeffs.iter_mut().enumerate() {
            *slot = coef;
            coef *= -rate / (j as f64 + 1.0);
        }
        jet
    }

    /// Series of `1 / (a + δ)`.
    pub fn reciprocal_linear(order: usize, a: Complex64) -> Self {
        let mut jet = Jet::zero(order);
        let inv = a.inv();
        let mut coef = inv;
        for slot in jet.coeffs.iter_mut() {
            *slot = coef;
            coef *= -inv;
        }
        jet
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// In-place multiplication by `(a + δ) * scale`.
    pub fn mul_linear(&mut self, a: Complex64, scale: f64) {
        for j in (0..self.coeffs.len()).rev() {
            let lower = if j > 0 {
                self.coeffs[j - 1]
            } else {
                Complex64::new(0.0, 0.0)
            };
            self.coeffs[j] = (self.coeffs[j] * a + lower) * scale;
        }
    }

    pub fn add_scaled(&mut self, other: &Jet, c: Complex64) {
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += *y * c;
        }
    }

    pub fn add_constant(&mut self, c: Complex64) {
        self.coeffs[0] += c;
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let n = self.coeffs.len().min(other.coeffs.len());
        let mut out = Jet::zero(n);
        for i in 0..n {
            for j in 0..n - i {
                out.coeffs[i + j] += self.coeffs[i] * other.coeffs[j];
            }
        }
        out
    }

    pub fn scale(&mut self, c: Complex64) {
        for x in self.coeffs.iter_mut() {
            *x *= c;
        }
    }

    /// Largest coefficient modulus, used for rounding estimates.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Evaluate the polynomial at `δ`.
    pub fn eval(&self, delta: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * delta + c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn linear_products_match_polynomial_expansion() {
        // (2 + δ)(3 + δ) = 6 + 5δ + δ²
        let mut jet = Jet::constant(4, c(1.0, 0.0));
        jet.mul_linear(c(2.0, 0.0), 1.0);
        jet.mul_linear(c(3.0, 0.0), 1.0);
        assert_eq!(jet.coeffs()[..3], [c(6.0, 0.0), c(5.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(jet.coeffs()[3], c(0.0, 0.0));
    }

    #[test]
    fn reciprocal_times_linear_is_one() {
        let a = c(0.3, -1.7);
        let mut jet = Jet::reciprocal_linear(6, a);
        jet.mul_linear(a, 1.0);
        assert!((jet.coeffs()[0] - c(1.0, 0.0)).norm() < 1e-15);
        for x in &jet.coeffs()[1..] {
            assert!(x.norm() < 1e-15);
        }
    }

    #[test]
    fn exp_jet_evaluates_exponential() {
        let jet = Jet::scaled_exp(24, c(2.0, 1.0), 1.5);
        let delta = c(0.1, -0.2);
        let exact = c(2.0, 1.0) * (-delta * 1.5).exp();
        assert!((jet.eval(delta) - exact).norm() < 1e-14);
    }
}
