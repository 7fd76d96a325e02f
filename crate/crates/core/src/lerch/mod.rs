//! Evaluation of the Lerch zeta-function
//!
//! L(s; α, λ) = ∑_{n≥0} e(λn) (n+α)^{-s},   e(x) = exp(2πix)
//!
//! on the half-plane `Re s > 0`: by the defining series for `Re s > 1`, by a
//! certified Euler–Maclaurin continuation everywhere else, and for
//! derivatives by Cauchy's integral formula on a small circle.
//!
//! `λ = 1` gives the Hurwitz zeta-function `ζ(s, α)` (pole at `s = 1`), and
//! `α = λ = 1` the Riemann zeta-function. Floating-point `α` is always a
//! binary rational; "transcendental α" (default `1/π`) refers to the value
//! it approximates, not to the arithmetic nature of the double.

mod jet;
pub mod tail;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
pub use jet::Jet;
pub use tail::{TailExpansion, TailSum};

/// Unit roundoff of `f64`.
pub(crate) const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// Default `α`, a double approximating the transcendental number `1/π`.
pub const DEFAULT_ALPHA: f64 = 1.0 / PI;

/// The pair `(α, λ) ∈ (0, 1]²` defining one Lerch zeta-function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LerchParameters {
    alpha: f64,
    lambda: f64,
}

impl LerchParameters {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha <= 1.0) {
            return Err(LabError::InvalidParameter(format!("alpha out of (0,1]: {alpha}")));
        }
        if !(lambda.is_finite() && lambda > 0.0 && lambda <= 1.0) {
            return Err(LabError::InvalidParameter(format!("lambda out of (0,1]: {lambda}")));
        }
        Ok(LerchParameters { alpha, lambda })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `λ = 1`: the Hurwitz case with a pole at `s = 1`.
    pub fn is_hurwitz(&self) -> bool {
        self.lambda == 1.0
    }
}

/// A point `s = σ + it`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripPoint {
    pub sigma: f64,
    pub t: f64,
}

impl StripPoint {
    pub fn new(sigma: f64, t: f64) -> Self {
        StripPoint { sigma, t }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.sigma, self.t)
    }
}

impl From<Complex64> for StripPoint {
    fn from(s: Complex64) -> Self {
        StripPoint::new(s.re, s.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub value: Complex64,
    /// Bound on truncation, continuation and rounding error.
    pub abs_error_bound: f64,
    pub terms_used: usize,
}

/// Limits for the continuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    /// Largest admissible cutoff `M` of the direct part.
    pub max_terms: usize,
    /// Hurwitz case only: evaluation is refused when `|s - 1|` is smaller.
    pub pole_exclusion_radius: f64,
    /// Number of twisted correction orders kept in the coefficient table.
    pub max_twisted_order: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            max_terms: 50_000_000,
            pole_exclusion_radius: 1e-3,
            max_twisted_order: 160,
        }
    }
}

/// Number of Cauchy nodes used by [`eval_derivative`].
pub const CAUCHY_NODES: usize = 64;

/// Largest derivative order accepted by [`eval_derivative`].
pub const MAX_DERIVATIVE: usize = 12;

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    re: f64,
    im: f64,
    re_c: f64,
    im_c: f64,
}

impl CompensatedSum {
    #[inline]
    fn add_part(sum: &mut f64, comp: &mut f64, x: f64) {
        let t = *sum + x;
        if sum.abs() >= x.abs() {
            *comp += (*sum - t) + x;
        } else {
            *comp += (x - t) + *sum;
        }
        *sum = t;
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        Self::add_part(&mut self.re, &mut self.re_c, z.re);
        Self::add_part(&mut self.im, &mut self.im_c, z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }
}

/// Relative error of one computed term `e(λn)(n+α)^{-s}` with `ln(n+α) = l`.
fn term_rel_error(s: Complex64, l: f64) -> f64 {
    UNIT_ROUNDOFF * (2.5 * s.norm() * (1.0 + l.abs()) + 20.0)
}

/// Direct part `∑_{n<m} e(λn)(n+α)^{-s}` and its rounding bound.
fn direct_sum(p: &LerchParameters, s: Complex64, m: usize) -> (Complex64, f64) {
    let mut acc = CompensatedSum::default();
    let mut abs_sum = 0.0;
    let mut last_l = 0.0;
    for n in 0..m as u64 {
        let (term, l) = tail::twisted_power(p.alpha, p.lambda, n, s);
        acc.add(term);
        abs_sum += term.norm();
        last_l = l;
    }
    let rel = term_rel_error(s, last_l.max(p.alpha.ln().abs())) + 3.0 * UNIT_ROUNDOFF;
    (acc.value(), abs_sum * rel)
}

/// Partial sum of the defining series over `n = 0..n_terms-1`.
///
/// The bound covers the omitted tail, `∑_{n≥N} (n+α)^{-σ} ≤
/// (N-1+α)^{1-σ} / (σ-1)`, plus rounding.
pub fn eval_series(s: StripPoint, p: &LerchParameters, n_terms: usize) -> Result<EvaluationResult> {
    if !(s.sigma > 1.0) {
        return Err(LabError::Domain {
            sigma: s.sigma,
            t: s.t,
            reason: "the defining series needs Re s > 1".into(),
        });
    }
    if n_terms == 0 {
        return Err(LabError::InvalidParameter("n_terms must be >= 1".into()));
    }
    let z = s.to_complex();
    let (value, rounding) = direct_sum(p, z, n_terms);
    let tail = (n_terms as f64 - 1.0 + p.alpha).powf(1.0 - s.sigma) / (s.sigma - 1.0);
    Ok(EvaluationResult {
        value,
        abs_error_bound: tail + rounding,
        terms_used: n_terms,
    })
}

/// Analytic continuation of `L(s; α, λ)` to `Re s > 0`, with
/// `abs_error_bound ≤ target_abs_err`.
pub fn eval_continued(s: StripPoint, p: &LerchParameters, target_abs_err: f64) -> Result<EvaluationResult> {
    let opts = ContinuationOptions::default();
    let tail = TailExpansion::new(p.alpha, p.lambda, opts.max_twisted_order);
    eval_continued_with(s, p, target_abs_err, &tail, &opts)
}

/// [`eval_continued`] aiming at `target_abs_err`, settling for the
/// rounding floor (up to `max_abs_err`) when the target is out of reach.
pub fn eval_continued_floor(
    s: StripPoint,
    p: &LerchParameters,
    target_abs_err: f64,
    max_abs_err: f64,
) -> Result<EvaluationResult> {
    let mut target = target_abs_err;
    for _ in 0..4 {
        match eval_continued(s, p, target) {
            Err(LabError::NonConvergence { achieved, .. }) if achieved.is_finite() && 2.0 * achieved <= max_abs_err => {
                target = 2.0 * achieved;
            }
            other => return other,
        }
    }
    eval_continued(s, p, target)
}

/// [`eval_derivative`] with the same fallback as [`eval_continued_floor`].
pub fn eval_derivative_floor(
    s: StripPoint,
    p: &LerchParameters,
    k: usize,
    target_abs_err: f64,
    max_abs_err: f64,
) -> Result<EvaluationResult> {
    let mut target = target_abs_err;
    for _ in 0..4 {
        match eval_derivative(s, p, k, target) {
            Err(LabError::NonConvergence { achieved, .. }) if achieved.is_finite() && 2.0 * achieved <= max_abs_err => {
                target = 2.0 * achieved;
            }
            other => return other,
        }
    }
    eval_derivative(s, p, k, target)
}

/// [`eval_continued`] with a prebuilt tail expansion and explicit limits.
pub fn eval_continued_with(
    s: StripPoint,
    p: &LerchParameters,
    target_abs_err: f64,
    tail: &TailExpansion,
    opts: &ContinuationOptions,
) -> Result<EvaluationResult> {
    if !(s.sigma > 0.0) || !s.t.is_finite() {
        return Err(LabError::Domain {
            sigma: s.sigma,
            t: s.t,
            reason: "continuation is implemented for Re s > 0".into(),
        });
    }
    if !(target_abs_err > 0.0) {
        return Err(LabError::InvalidParameter("target_abs_err must be positive".into()));
    }
    let z = s.to_complex();
    if p.is_hurwitz() && (z - 1.0).norm() < opts.pole_exclusion_radius {
        return Err(LabError::Pole {
            sigma: s.sigma,
            t: s.t,
            radius: opts.pole_exclusion_radius,
        });
    }

    let default_order = 32;
    let mut m = ((2.0 * (s.t.abs() + 10.0)).ceil() as usize).max(tail.cutoff_for_ratio(z.norm(), 0.5, default_order));
    let tail_tol = 0.25 * target_abs_err;
    loop {
        if m > opts.max_terms {
            return Err(LabError::NonConvergence {
                target: target_abs_err,
                achieved: f64::INFINITY,
                max_terms: opts.max_terms,
            });
        }
        let t_sum = tail.expand(z, m, 1, 0.0, tail_tol);
        if t_sum.remainder > tail_tol {
            m *= 2;
            continue;
        }
        let (head, head_rounding) = direct_sum(p, z, m);
        let x_ln = (m as f64 + p.alpha).ln();
        let tail_rounding = t_sum.abs_sum * (term_rel_error(z, x_ln) + 4.0 * t_sum.terms as f64 * UNIT_ROUNDOFF);
        let value = head + t_sum.jet.coeffs()[0];
        let bound = t_sum.remainder + head_rounding + tail_rounding + value.norm() * UNIT_ROUNDOFF;
        if bound > target_abs_err {
            // rounding dominates; a longer direct part will not help
            return Err(LabError::NonConvergence {
                target: target_abs_err,
                achieved: bound,
                max_terms: opts.max_terms,
            });
        }
        return Ok(EvaluationResult {
            value,
            abs_error_bound: bound,
            terms_used: m + t_sum.terms,
        });
    }
}

/// Radius of the Cauchy circle used for derivatives at `s`.
pub fn cauchy_radius(s: StripPoint, p: &LerchParameters, opts: &ContinuationOptions) -> Result<f64> {
    let mut r = 0.1_f64.min(s.sigma);
    if p.is_hurwitz() {
        let gap = (s.to_complex() - 1.0).norm() - opts.pole_exclusion_radius;
        r = r.min(gap);
    }
    let r = r / 2.0;
    if !(r >= 1e-4) {
        return Err(LabError::Radius { sigma: s.sigma, t: s.t });
    }
    Ok(r)
}

/// `k`-th derivative in `s` by the trapezoid rule for Cauchy's integral on
/// a circle of radius `min(0.1, σ)/2` (further shrunk away from the
/// Hurwitz pole), with [`CAUCHY_NODES`] nodes.
pub fn eval_derivative(s: StripPoint, p: &LerchParameters, k: usize, target_abs_err: f64) -> Result<EvaluationResult> {
    if k > MAX_DERIVATIVE {
        return Err(LabError::InvalidParameter(format!(
            "derivative order {k} exceeds {MAX_DERIVATIVE}"
        )));
    }
    if k == 0 {
        return eval_continued(s, p, target_abs_err);
    }
    if !(s.sigma > 0.0) {
        return Err(LabError::Domain {
            sigma: s.sigma,
            t: s.t,
            reason: "continuation is implemented for Re s > 0".into(),
        });
    }
    if !(target_abs_err > 0.0) {
        return Err(LabError::InvalidParameter("target_abs_err must be positive".into()));
    }
    let opts = ContinuationOptions::default();
    let r = cauchy_radius(s, p, &opts)?;
    let tail = TailExpansion::new(p.alpha, p.lambda, opts.max_twisted_order);
    // k!/r^k amplifies node errors
    let gain = (1..=k).fold(1.0, |acc, i| acc * i as f64) / r.powi(k as i32);
    let node_target = 0.5 * target_abs_err / gain;
    let center = s.to_complex();
    let mut acc = CompensatedSum::default();
    let mut node_bound: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut terms = 0;
    for j in 0..CAUCHY_NODES {
        let theta = 2.0 * PI * j as f64 / CAUCHY_NODES as f64;
        let w = Complex64::from_polar(1.0, theta);
        let node = center + w * r;
        // report shortfalls in derivative units so callers can retry
        let res = eval_continued_with(node.into(), p, node_target, &tail, &opts).map_err(|e| match e {
            LabError::NonConvergence {
                achieved, max_terms, ..
            } => LabError::NonConvergence {
                target: target_abs_err,
                achieved: 2.0 * gain * achieved,
                max_terms,
            },
            e => e,
        })?;
        acc.add(res.value * w.powi(-(k as i32)));
        node_bound = node_bound.max(res.abs_error_bound);
        max_abs = max_abs.max(res.value.norm());
        terms += res.terms_used;
    }
    let value = acc.value() * gain / CAUCHY_NODES as f64;
    // aliasing from orders k + 64j, estimated for a function analytic on the
    // doubled circle, plus rounding of the node sum
    let aliasing = max_abs * 0.5_f64.powi(CAUCHY_NODES as i32);
    let rounding = 8.0 * UNIT_ROUNDOFF * max_abs;
    let bound = gain * (node_bound + aliasing + rounding);
    if bound > target_abs_err {
        return Err(LabError::NonConvergence {
            target: target_abs_err,
            achieved: bound,
            max_terms: opts.max_terms,
        });
    }
    Ok(EvaluationResult {
        value,
        abs_error_bound: bound,
        terms_used: terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, lambda: f64) -> LerchParameters {
        LerchParameters::new(alpha, lambda).unwrap()
    }

    #[test]
    fn parameters_reject_out_of_range() {
        assert!(LerchParameters::new(1.5, 0.5).is_err());
        assert!(LerchParameters::new(0.0, 0.5).is_err());
        assert!(LerchParameters::new(0.5, 0.0).is_err());
        assert!(LerchParameters::new(0.5, f64::NAN).is_err());
        assert!(LerchParameters::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn series_rejects_sigma_at_most_one() {
        let p = params(1.0, 1.0);
        assert!(matches!(
            eval_series(StripPoint::new(1.0, 3.0), &p, 10),
            Err(LabError::Domain { .. })
        ));
        assert!(eval_series(StripPoint::new(2.0, 0.0), &p, 0).is_err());
    }

    #[test]
    fn single_term_series_is_alpha_power() {
        let p = params(0.37, 0.81);
        let s = StripPoint::new(1.7, -4.2);
        let got = eval_series(s, &p, 1).unwrap().value;
        let expected = Complex64::new(0.37, 0.0).powc(-s.to_complex());
        assert!((got - expected).norm() <= 4e-16 * expected.norm());
    }

    #[test]
    fn zeta_two_partial_sum_within_tail_bound() {
        let p = params(1.0, 1.0);
        let res = eval_series(StripPoint::new(2.0, 0.0), &p, 100_000).unwrap();
        let exact = PI * PI / 6.0;
        assert!((res.value.re - exact).abs() <= res.abs_error_bound);
        assert!(res.abs_error_bound < 1.0001e-5);
    }

    #[test]
    fn alternating_series_gives_half_zeta_two() {
        // error of an alternating series is at most the first omitted term
        let n = 20_000;
        let res = eval_series(StripPoint::new(2.0, 0.0), &params(1.0, 0.5), n).unwrap();
        let first_omitted = 1.0 / ((n + 1) as f64).powi(2);
        assert!((res.value.re - PI * PI / 12.0).abs() <= first_omitted);
        assert!(first_omitted <= 1e-8);
        assert!(res.value.im.abs() < 1e-12);
    }

    #[test]
    fn continuation_rejects_pole_and_left_half_plane() {
        let p = params(1.0, 1.0);
        assert!(matches!(
            eval_continued(StripPoint::new(1.0005, 0.0), &p, 1e-10),
            Err(LabError::Pole { .. })
        ));
        assert!(matches!(
            eval_continued(StripPoint::new(-0.1, 0.0), &p, 1e-10),
            Err(LabError::Domain { .. })
        ));
        // λ ≠ 1 is entire: s = 1 is an ordinary point
        let eta = eval_continued(StripPoint::new(1.0, 0.0), &params(1.0, 0.5), 1e-12).unwrap();
        assert!((eta.value.re - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn zeroth_derivative_is_the_value() {
        let p = params(DEFAULT_ALPHA, 1.0 / 3.0);
        let s = StripPoint::new(0.7, 5.0);
        let a = eval_derivative(s, &p, 0, 1e-12).unwrap();
        let b = eval_continued(s, &p, 1e-12).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn derivative_order_is_capped() {
        let p = params(0.5, 0.5);
        assert!(eval_derivative(StripPoint::new(0.7, 1.0), &p, 13, 1e-6).is_err());
    }

    #[test]
    fn no_circle_fits_next_to_the_pole() {
        let p = params(1.0, 1.0);
        let s = StripPoint::new(1.0011, 0.0);
        assert!(matches!(eval_derivative(s, &p, 1, 1e-6), Err(LabError::Radius { .. })));
    }
}
