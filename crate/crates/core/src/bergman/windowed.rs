use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BergmanDomain, DeltaTransform, TupleElement};
use crate::error::{LabError, Result};
use crate::fmt17;
use crate::lerch::{tail::frac_mul, CompensatedSum, LerchParameters};

/// Largest admissible window start `e^y`.
pub const MAX_WINDOW_START: f64 = 1e8;

const CHUNK: u64 = 4096;

fn unit(turns: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * turns)
}

/// `φ(θ, t) = ∑_{n=0}^{⌊t⌋} e(θn) = (e(θ(⌊t⌋+1)) - 1) / (e(θ) - 1)`.
pub fn phi_pair_sum(theta: f64, t: f64) -> Result<Complex64> {
    if !theta.is_finite() || theta.fract() == 0.0 {
        return Err(LabError::InvalidParameter(format!(
            "theta = {theta} is an integer; the sum grows linearly"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(LabError::InvalidParameter(format!("t = {t} must be >= 0")));
    }
    let theta = theta.rem_euclid(1.0);
    let n = t.floor() as u64 + 1;
    Ok((unit(frac_mul(theta, n)) - 1.0) / (unit(theta) - 1.0))
}

/// Windowed sums over integers `n` with `n + α ∈ [e^x, e^{x + B x^{-2m}}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowedSums {
    pub x: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub n_first: u64,
    pub n_last: u64,
    /// `Σ* ∑_j |Δ_j|²`.
    pub s1: f64,
    /// `Σ* ∑_{k≠l} e((λ_k - λ_l)n) Δ_k conj(Δ_l)`.
    pub s2: Complex64,
    /// `Σ* |∑_j e(λ_j n) Δ_j|`.
    pub s: f64,
    /// `Σ* |∑_j e(λ_j n) Δ_j|²`, equal to `s1 + s2`.
    pub square_sum: f64,
}

impl WindowedSums {
    pub fn terms(&self) -> u64 {
        self.n_last - self.n_first + 1
    }
}

fn shared_alpha(g: &TupleElement, params: &[LerchParameters]) -> Result<f64> {
    if params.len() != g.len() {
        return Err(LabError::LengthMismatch {
            left: g.len(),
            right: params.len(),
        });
    }
    let alpha = params[0].alpha();
    if params.iter().any(|p| p.alpha() != alpha) {
        return Err(LabError::InvalidParameter("all components must share one alpha".into()));
    }
    for (k, a) in params.iter().enumerate() {
        for b in &params[k + 1..] {
            if (a.lambda() - b.lambda()).abs() < 1e-9 {
                return Err(LabError::DuplicateLambda(a.lambda(), b.lambda()));
            }
        }
    }
    Ok(alpha)
}

fn window(x: f64, alpha: f64, exponent: u32, scale: f64) -> Result<(f64, f64, u64, u64)> {
    if !(x > 0.0 && scale > 0.0) {
        return Err(LabError::InvalidParameter(format!(
            "window needs x > 0 and scale > 0, got x = {x}, scale = {scale}"
        )));
    }
    let lo = x.exp();
    if !(lo <= MAX_WINDOW_START) {
        return Err(LabError::WindowTooLarge { hi: lo });
    }
    let hi = (x + scale * x.powi(-2 * exponent as i32)).exp();
    let first = (lo - alpha).ceil().max(0.0);
    let last = (hi - alpha).floor();
    if last < first {
        return Err(LabError::EmptyWindow { lo, hi });
    }
    Ok((lo, hi, first as u64, last as u64))
}

#[derive(Default, Clone, Copy)]
struct Partial {
    s1: CompensatedSum,
    s2: CompensatedSum,
    s: CompensatedSum,
    sq: CompensatedSum,
}

struct Kernel<'a> {
    deltas: Vec<DeltaTransform>,
    params: &'a [LerchParameters],
    alpha: f64,
}

impl Kernel<'_> {
    fn new<'a>(g: &TupleElement, params: &'a [LerchParameters], u: &BergmanDomain, alpha: f64) -> Kernel<'a> {
        Kernel {
            deltas: g
                .components()
                .iter()
                .map(|e| DeltaTransform::new(e.clone(), u))
                .collect(),
            params,
            alpha,
        }
    }

    /// `(Δ_j(log(n+α)))_j` and the phases `e(λ_j n)`.
    fn terms(&self, n: u64, d: &mut [Complex64], e: &mut [Complex64]) {
        let z = Complex64::new((n as f64 + self.alpha).ln(), 0.0);
        for j in 0..self.deltas.len() {
            d[j] = self.deltas[j].eval(z);
            e[j] = unit(frac_mul(self.params[j].lambda(), n));
        }
    }

    fn accumulate(&self, range: std::ops::RangeInclusive<u64>) -> Partial {
        let m = self.deltas.len();
        let mut d = vec![Complex64::new(0.0, 0.0); m];
        let mut e = vec![Complex64::new(0.0, 0.0); m];
        let mut acc = Partial::default();
        for n in range {
            self.terms(n, &mut d, &mut e);
            let mut v = Complex64::new(0.0, 0.0);
            let mut diag = 0.0;
            let mut cross = Complex64::new(0.0, 0.0);
            for k in 0..m {
                v += e[k] * d[k];
                diag += d[k].norm_sqr();
                for l in 0..m {
                    if l != k {
                        let lam = self.params[k].lambda() - self.params[l].lambda();
                        cross += unit(frac_mul(lam, n)) * d[k] * d[l].conj();
                    }
                }
            }
            acc.s1.add(Complex64::new(diag, 0.0));
            acc.s2.add(cross);
            acc.s.add(Complex64::new(v.norm(), 0.0));
            acc.sq.add(Complex64::new(v.norm_sqr(), 0.0));
        }
        acc
    }

    /// Deterministic reduction over fixed chunks, independent of threads.
    fn reduce(&self, first: u64, last: u64) -> Partial {
        let chunks: Vec<(u64, u64)> = (first..=last)
            .step_by(CHUNK as usize)
            .map(|a| (a, (a + CHUNK - 1).min(last)))
            .collect();
        let parts: Vec<Partial> = chunks.par_iter().map(|&(a, b)| self.accumulate(a..=b)).collect();
        let mut total = Partial::default();
        for p in parts {
            total.s1.add(p.s1.value());
            total.s2.add(p.s2.value());
            total.s.add(p.s.value());
            total.sq.add(p.sq.value());
        }
        total
    }
}

/// `S1`, `S2` and `S` over the window `[e^x, e^{x + B x^{-2m}}]`.
///
/// Verifies `Σ* |∑_j e(λ_j n) Δ_j|² = S1 + S2` to 1e-9 relative and fails
/// with [`LabError::Decomposition`] otherwise.
pub fn windowed_sums(
    g: &TupleElement,
    params: &[LerchParameters],
    u: &BergmanDomain,
    x: f64,
    window_exponent: u32,
    window_scale: f64,
) -> Result<WindowedSums> {
    let alpha = shared_alpha(g, params)?;
    let (lo, hi, first, last) = window(x, alpha, window_exponent, window_scale)?;
    let kernel = Kernel::new(g, params, u, alpha);
    let total = kernel.reduce(first, last);
    let out = WindowedSums {
        x,
        window_lo: lo,
        window_hi: hi,
        n_first: first,
        n_last: last,
        s1: total.s1.value().re,
        s2: total.s2.value(),
        s: total.s.value().re,
        square_sum: total.sq.value().re,
    };
    let split = out.s1 + out.s2.re;
    let scale = out.square_sum.max(out.s1);
    if (out.square_sum - split).abs() > 1e-9 * scale || out.s2.im.abs() > 1e-9 * scale {
        return Err(LabError::Decomposition {
            direct: out.square_sum,
            split,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub x: f64,
    pub s: f64,
    pub s1: f64,
    pub s2_abs: f64,
    /// `e^{x(1-σ₂)} / x^{2m}`.
    pub envelope: f64,
    /// `∑_{n+α ≤ window end} |⟨v_n, g⟩|`.
    pub cum_sum: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub terms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub sigma1: f64,
    pub sigma2: f64,
    pub components: usize,
    pub window_scale: f64,
    pub rows: Vec<DiagnosticRow>,
}

impl DiagnosticReport {
    pub const CSV_HEADER: &'static str = "x,S,S1,|S2|,envelope,cum_sum";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt17(r.x),
                fmt17(r.s),
                fmt17(r.s1),
                fmt17(r.s2_abs),
                fmt17(r.envelope),
                fmt17(r.cum_sum)
            ));
        }
        out
    }
}

/// Tabulate `S(x)` against the envelope `e^{x(1-σ₂)}/x^{2m}` and the
/// cumulative `∑ |⟨v_n, g⟩|` up to each window end. Windows use exponent
/// `m` (the number of components) and scale `window_scale`; see
/// [`divergence_diagnostic_with`] to choose another exponent.
///
/// The cumulative sum visits every `n` up to the last window end, so its
/// cost is linear in `e^{max x}`.
pub fn divergence_diagnostic(
    g: &TupleElement,
    params: &[LerchParameters],
    u: &BergmanDomain,
    x_grid: &[f64],
    window_scale: f64,
) -> Result<DiagnosticReport> {
    divergence_diagnostic_with(g, params, u, x_grid, g.len() as u32, window_scale)
}

/// [`divergence_diagnostic`] with an explicit window exponent. The
/// envelope keeps `m` = number of components.
pub fn divergence_diagnostic_with(
    g: &TupleElement,
    params: &[LerchParameters],
    u: &BergmanDomain,
    x_grid: &[f64],
    window_exponent: u32,
    window_scale: f64,
) -> Result<DiagnosticReport> {
    let alpha = shared_alpha(g, params)?;
    let m = g.len() as u32;
    let sigma2 = u.sigma2();
    let kernel = Kernel::new(g, params, u, alpha);

    let mut order: Vec<usize> = (0..x_grid.len()).collect();
    order.sort_by(|&a, &b| x_grid[a].total_cmp(&x_grid[b]));

    let mut rows = vec![None; x_grid.len()];
    let mut cum = 0.0;
    let mut next_n = 0u64;
    for idx in order {
        let x = x_grid[idx];
        let ws = windowed_sums(g, params, u, x, window_exponent, window_scale)?;
        if ws.n_last + 1 > next_n {
            cum += kernel.reduce(next_n, ws.n_last).s.value().re;
            next_n = ws.n_last + 1;
        }
        rows[idx] = Some(DiagnosticRow {
            x,
            s: ws.s,
            s1: ws.s1,
            s2_abs: ws.s2.norm(),
            envelope: (x * (1.0 - sigma2)).exp() / x.powi(2 * m as i32),
            cum_sum: cum,
            window_lo: ws.window_lo,
            window_hi: ws.window_hi,
            terms: ws.terms(),
        });
    }
    Ok(DiagnosticReport {
        sigma1: u.sigma1(),
        sigma2,
        components: g.len(),
        window_scale,
        rows: rows.into_iter().map(|r| r.expect("every row filled")).collect(),
    })
}
