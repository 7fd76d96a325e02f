//! Vertical-line engine: Taylor polynomials of `L(c + iτ + δ)` in `δ` for
//! many shifts `τ` on an equally spaced grid.
//!
//! The main sum `∑_{n<M} e(λn)(n+α)^{-c-iτ} e^{-δℓ_n}`, `ℓ_n = ln(n+α)`, is
//! split into bands of nearby `ℓ_n`. Inside a band with centre `c_B`,
//! `e^{-δℓ_n} = e^{-δc_B} e^{-δ(ℓ_n - c_B)}` and the second factor is
//! expanded to [`BAND_ORDER`] terms. Across a block of consecutive shifts
//! each term is advanced by the rotation `(n+α)^{-ih}`; every block is seeded
//! from exact powers, so its result does not depend on other blocks. The
//! tail beyond `M` comes from the factored tail expansion. All truncations
//! carry explicit bounds; a shift whose bound is too large is evaluated
//! directly at the sample points instead.

// Index loops mirror the SIMD lanes of the vector kernels.
#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::geometry::{CompactSet, TargetPolynomial};
use crate::lerch::tail::{exp_tail, frac_mul, TailExpansion};
use crate::lerch::{eval_continued_floor, LerchParameters, StripPoint, UNIT_ROUNDOFF};

/// Shifts per block.
pub const BLOCK: usize = 128;
/// Taylor order inside a band.
pub const BAND_ORDER: usize = 4;
/// Largest Taylor order of the combined polynomial.
pub const MAX_ORDER: usize = 28;

const LANES: usize = 8;
const CHUNK: usize = 256;
const TAIL_RATIO: f64 = 0.75;
const TAIL_TABLE: usize = 600;
/// Above this per-shift bound the engine falls back to direct evaluation.
const FALLBACK_BOUND: f64 = 1e-6;
const DIRECT_TARGET: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Distance of one component at one shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEval {
    pub distance: f64,
    pub bound: f64,
    /// Upper bound for `|∂_s L|` over the compact set at this shift.
    pub lipschitz: f64,
}

/// Taylor polynomial about the centre at one shift.
#[derive(Debug, Clone)]
pub struct ShiftJet {
    pub coeffs: Vec<Complex64>,
    /// Uniform error bound over `|δ| ≤ radius`.
    pub bound: f64,
}

#[derive(Debug, Clone)]
struct Band {
    start: usize,
    end: usize,
    center: f64,
    /// `(-c)^i / i!`.
    exp_coeffs: [f64; MAX_ORDER],
    /// `e^{r|c|} · exp_tail(BAND_ORDER, r w)`.
    trunc_factor: f64,
}

/// Precomputed tables for one `(α, λ, K, f)`.
pub struct ComponentEngine {
    params: LerchParameters,
    tail: TailExpansion,
    center: Complex64,
    radius: f64,
    step: f64,
    tol: f64,
    ell: Vec<f64>,
    mag: Vec<f64>,
    theta: Vec<f64>,
    qr: Vec<f64>,
    qi: Vec<f64>,
    pw: [Vec<f64>; BAND_ORDER - 1],
    mass_prefix: Vec<f64>,
    mass_ell_prefix: Vec<f64>,
    bands: Vec<Band>,
    /// `exp_tail(m, r · max|c_B|)`.
    band_exp_tail: [f64; MAX_ORDER + 1],
    max_band_growth: f64,
    points: Vec<Complex64>,
    delta_re: Vec<f64>,
    delta_im: Vec<f64>,
    target_re: Vec<f64>,
    target_im: Vec<f64>,
    isa: KernelIsa,
}

impl ComponentEngine {
    /// Tables for shifts in `[0, tau_max]` with grid step `step`; `tol` is
    /// the budget for every truncation (rounding is reported on top).
    pub fn new(
        params: LerchParameters,
        set: &CompactSet,
        target: &TargetPolynomial,
        tau_max: f64,
        step: f64,
        tol: f64,
    ) -> Result<Self> {
        let shape = set.shape();
        let points = set.sample_points();
        let values = points.iter().map(|p| target.eval(*p)).collect();
        Ok(Self::build(
            params,
            shape.center(),
            shape.radius(),
            points,
            values,
            tau_max,
            step,
            tol,
        ))
    }

    /// Engine used only for its jets: no sample points, `radius` is the
    /// disk on which the jets are certified.
    pub fn jets_only(
        params: LerchParameters,
        center: Complex64,
        radius: f64,
        tau_max: f64,
        step: f64,
        tol: f64,
    ) -> Self {
        Self::build(params, center, radius, Vec::new(), Vec::new(), tau_max, step, tol)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        params: LerchParameters,
        center: Complex64,
        radius: f64,
        points: Vec<Complex64>,
        fv: Vec<Complex64>,
        tau_max: f64,
        step: f64,
        tol: f64,
    ) -> Self {
        let tail = TailExpansion::new(params.alpha(), params.lambda(), TAIL_TABLE);
        let top = Complex64::new(center.re, center.im.abs() + tau_max.abs()).norm() + radius;
        let n_max = 2 * tail.cutoff_for_ratio(top, TAIL_RATIO, TAIL_TABLE) + 64;

        let alpha = params.alpha();
        let lambda = params.lambda();
        let ell: Vec<f64> = (0..n_max).map(|n| (n as f64 + alpha).ln()).collect();
        let mag: Vec<f64> = ell.iter().map(|l| (-center.re * l).exp()).collect();
        let theta: Vec<f64> = (0..n_max)
            .map(|n| 2.0 * std::f64::consts::PI * frac_mul(lambda, n as u64))
            .collect();
        let (qr, qi): (Vec<f64>, Vec<f64>) = ell
            .iter()
            .map(|l| {
                let (s, c) = (-step * l).sin_cos();
                (c, s)
            })
            .unzip();

        let mut mass_prefix = Vec::with_capacity(n_max + 1);
        let mut mass_ell_prefix = Vec::with_capacity(n_max + 1);
        let (mut acc, mut acc_l) = (0.0, 0.0);
        mass_prefix.push(0.0);
        mass_ell_prefix.push(0.0);
        for n in 0..n_max {
            acc += mag[n];
            acc_l += mag[n] * ell[n].abs();
            mass_prefix.push(acc);
            mass_ell_prefix.push(acc_l);
        }

        // band half-width so that all band truncations together stay below tol/4
        let ell_top = ell[n_max - 1];
        let growth = (radius * ell_top.max(ell[0].abs())).exp();
        let half_width = if radius > 0.0 {
            let budget = 0.25 * tol / (acc * growth);
            (0.9 * 24.0 * budget).powf(0.25) / radius
        } else {
            f64::INFINITY
        }
        .min(0.5);

        let mut bands = Vec::new();
        let mut pw: [Vec<f64>; BAND_ORDER - 1] = std::array::from_fn(|_| vec![0.0; n_max]);
        let mut start = 0;
        while start < n_max {
            let mut end = start + 1;
            while end < n_max && ell[end] - ell[start] <= 2.0 * half_width {
                end += 1;
            }
            let c = 0.5 * (ell[start] + ell[end - 1]);
            let w = 0.5 * (ell[end - 1] - ell[start]);
            for n in start..end {
                let d = -(ell[n] - c);
                let mut p = 1.0;
                for (k, slot) in pw.iter_mut().enumerate() {
                    p *= d / (k as f64 + 1.0);
                    slot[n] = p;
                }
            }
            let mut exp_coeffs = [0.0; MAX_ORDER];
            let mut e = 1.0;
            for (i, slot) in exp_coeffs.iter_mut().enumerate() {
                *slot = e;
                e *= -c / (i as f64 + 1.0);
            }
            bands.push(Band {
                start,
                end,
                center: c,
                exp_coeffs,
                trunc_factor: (radius * c.abs()).exp() * exp_tail(BAND_ORDER, radius * w),
            });
            start = end;
        }
        let c_max = bands.iter().map(|b| b.center.abs()).fold(0.0, f64::max);
        let band_exp_tail = std::array::from_fn(|m| exp_tail(m, radius * c_max));

        let delta_re = points.iter().map(|p| p.re - center.re).collect();
        let delta_im = points.iter().map(|p| p.im - center.im).collect();

        ComponentEngine {
            params,
            tail,
            center,
            radius,
            step,
            tol,
            ell,
            mag,
            theta,
            qr,
            qi,
            pw,
            mass_prefix,
            mass_ell_prefix,
            bands,
            band_exp_tail,
            max_band_growth: (radius * c_max).exp(),
            points,
            delta_re,
            delta_im,
            target_re: fv.iter().map(|z| z.re).collect(),
            target_im: fv.iter().map(|z| z.im).collect(),
            isa: KernelIsa::detect(),
        }
    }

    /// Force a kernel; fails if the CPU lacks it.
    pub fn with_isa(mut self, isa: KernelIsa) -> Result<Self> {
        if !isa.is_available() {
            return Err(LabError::InvalidParameter(format!(
                "{isa:?} kernel unavailable on this CPU"
            )));
        }
        self.isa = isa;
        Ok(self)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    fn n_max(&self) -> usize {
        self.ell.len()
    }

    /// Jets at `tau0 + i·step` for `i < nb`; `None` marks a shift whose
    /// bound exceeds the fallback threshold.
    pub fn block_jets(&self, tau0: f64, nb: usize) -> Result<Vec<Option<ShiftJet>>> {
        assert!((1..=BLOCK).contains(&nb));
        let taus: Vec<f64> = (0..nb).map(|i| tau0 + i as f64 * self.step).collect();
        let s0: Vec<Complex64> = taus.iter().map(|t| self.center + Complex64::new(0.0, *t)).collect();
        let top = s0.iter().map(|s| s.norm()).fold(0.0, f64::max) + self.radius;
        let mut m = self.tail.cutoff_for_ratio(top, TAIL_RATIO, TAIL_TABLE).max(32);

        // tails first: they decide whether m is large enough
        let tail_tol = 0.25 * self.tol;
        let tails = loop {
            if m > self.n_max() {
                return Err(LabError::NonConvergence {
                    target: self.tol,
                    achieved: f64::INFINITY,
                    max_terms: self.n_max(),
                });
            }
            let mut out = Vec::with_capacity(nb);
            let mut ok = true;
            for s in &s0 {
                let x_r = ((m as f64 + self.params.alpha()).ln() * self.radius).exp();
                let mut order = BAND_ORDER;
                let f = loop {
                    let f = self.tail.expand_factored(*s, m, order, self.radius, tail_tol);
                    if f.truncation * x_r <= 0.125 * self.tol || order >= MAX_ORDER {
                        break f;
                    }
                    order = (2 * order).min(MAX_ORDER);
                };
                if f.remainder > tail_tol {
                    ok = false;
                    break;
                }
                out.push(f);
            }
            if ok {
                break out;
            }
            m += m / 2;
        };

        let band_sums = self.main_sums(tau0, nb, m);
        let used: Vec<&Band> = self.bands.iter().take_while(|b| b.start < m).collect();
        let band_trunc: f64 = used
            .iter()
            .map(|b| b.trunc_factor * (self.mass_prefix[b.end.min(m)] - self.mass_prefix[b.start]))
            .sum();
        let mass = self.mass_prefix[m];
        let mass_ell = self.mass_ell_prefix[m];
        let n_chunks: usize = used.iter().map(|b| (b.end.min(m) - b.start).div_ceil(CHUNK)).sum();
        let x = m as f64 + self.params.alpha();
        let ln_x = x.ln();
        let tail_exp: [f64; MAX_ORDER] = {
            let mut e = [0.0; MAX_ORDER];
            let mut v = 1.0;
            for (i, slot) in e.iter_mut().enumerate() {
                *slot = v;
                v *= -ln_x / (i as f64 + 1.0);
            }
            e
        };
        let tail_exp_tail: [f64; MAX_ORDER + 1] = std::array::from_fn(|k| exp_tail(k, self.radius * ln_x));
        let r = self.radius;

        let mut jets = Vec::with_capacity(nb);
        for (i, f) in tails.iter().enumerate() {
            let sums = &band_sums[i * used.len()..(i + 1) * used.len()];
            // weight of the band polynomials on |δ| ≤ r
            let mut w_main = 0.0;
            for a in sums {
                let mut rp = 1.0;
                for j in 0..BAND_ORDER {
                    w_main += Complex64::new(a[2 * j], a[2 * j + 1]).norm() * rp;
                    rp *= r;
                }
            }
            let g = f.factor.coeffs();
            let g_abs: Vec<f64> = g
                .iter()
                .scan(1.0, |rp, c| {
                    let v = c.norm() * *rp;
                    *rp *= r;
                    Some(v)
                })
                .collect();
            let conv_bound = |order: usize| -> f64 {
                let main = w_main * self.band_exp_tail[order + 1 - BAND_ORDER];
                let tail: f64 = g_abs
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * tail_exp_tail[order.saturating_sub(j)])
                    .sum();
                main + tail
            };
            let mut order = BAND_ORDER;
            while order < MAX_ORDER && conv_bound(order) > 0.25 * self.tol {
                order += 1;
            }
            let conv = conv_bound(order);

            let mut coeffs = vec![ZERO; order];
            for (b, a) in used.iter().zip(sums) {
                for j in 0..BAND_ORDER.min(order) {
                    let aj = Complex64::new(a[2 * j], a[2 * j + 1]);
                    for k in j..order {
                        coeffs[k] += aj * b.exp_coeffs[k - j];
                    }
                }
            }
            for (j, gj) in g.iter().enumerate().take(order) {
                for k in j..order {
                    coeffs[k] += gj * tail_exp[k - j];
                }
            }

            let t_abs = (self.center.im + taus[i]).abs() + 1.0;
            let rounding = UNIT_ROUNDOFF
                * (4.0 * t_abs * mass_ell * self.max_band_growth
                    + (4.0 * BLOCK as f64 + (CHUNK / LANES) as f64 + 2.0 * n_chunks as f64 + 40.0)
                        * mass
                        * self.max_band_growth
                    + (2.5 * s0[i].norm() * (1.0 + ln_x) + 20.0 + 4.0 * f.terms as f64) * f.abs_sum * x.powf(r)
                    + 2.0 * (MAX_ORDER as f64 + 8.0) * (w_main + g_abs.iter().sum::<f64>()) * 10.0);
            let bound = band_trunc + f.remainder + f.truncation * x.powf(r) + conv + rounding;
            jets.push(if bound <= FALLBACK_BOUND {
                Some(ShiftJet { coeffs, bound })
            } else {
                None
            });
        }
        Ok(jets)
    }

    /// Band sums `∑_{n∈B} e(λn)(n+α)^{-c-iτ} (-(ℓ_n - c_B))^j / j!` for
    /// `j < BAND_ORDER`, laid out as `[τ][band][re, im; j]`.
    fn main_sums(&self, tau0: f64, nb: usize, m: usize) -> Vec<[f64; 2 * BAND_ORDER]> {
        let used = self.bands.iter().take_while(|b| b.start < m).count();
        let mut out = vec![[0.0; 2 * BAND_ORDER]; nb * used];
        let tt = self.center.im + tau0;
        let mut re = [0.0; CHUNK];
        let mut im = [0.0; CHUNK];
        let mut qr = [0.0; CHUNK];
        let mut qi = [0.0; CHUNK];
        let mut p1 = [0.0; CHUNK];
        let mut p2 = [0.0; CHUNK];
        let mut p3 = [0.0; CHUNK];
        for (bi, band) in self.bands[..used].iter().enumerate() {
            let end = band.end.min(m);
            let mut lo = band.start;
            while lo < end {
                let hi = (lo + CHUNK).min(end);
                let len = hi - lo;
                let padded = len.div_ceil(LANES) * LANES;
                for k in 0..len {
                    let n = lo + k;
                    let (s, c) = (self.theta[n] - tt * self.ell[n]).sin_cos();
                    re[k] = self.mag[n] * c;
                    im[k] = self.mag[n] * s;
                    qr[k] = self.qr[n];
                    qi[k] = self.qi[n];
                    p1[k] = self.pw[0][n];
                    p2[k] = self.pw[1][n];
                    p3[k] = self.pw[2][n];
                }
                for k in len..padded {
                    re[k] = 0.0;
                    im[k] = 0.0;
                    qr[k] = 1.0;
                    qi[k] = 0.0;
                    p1[k] = 0.0;
                    p2[k] = 0.0;
                    p3[k] = 0.0;
                }
                let bufs = KernelBufs {
                    re: &mut re[..padded],
                    im: &mut im[..padded],
                    qr: &qr[..padded],
                    qi: &qi[..padded],
                    p1: &p1[..padded],
                    p2: &p2[..padded],
                    p3: &p3[..padded],
                };
                run_kernel(self.isa, nb, bufs, &mut out[bi..], used);
                lo = hi;
            }
        }
        out
    }

    /// Distances at `tau0 + i·step`, `i < nb`.
    pub fn eval_block(&self, tau0: f64, nb: usize) -> Result<Vec<PointEval>> {
        let jets = self.block_jets(tau0, nb)?;
        let mut out = Vec::with_capacity(nb);
        for (i, jet) in jets.into_iter().enumerate() {
            let tau = tau0 + i as f64 * self.step;
            out.push(match jet {
                Some(j) => self.sample(&j),
                None => self.direct(tau)?,
            });
        }
        Ok(out)
    }

    /// Distance at a single shift, off the grid if need be.
    pub fn eval_at(&self, tau: f64) -> Result<PointEval> {
        Ok(self.eval_block(tau, 1)?[0])
    }

    fn sample(&self, jet: &ShiftJet) -> PointEval {
        let c = &jet.coeffs;
        let np = self.delta_re.len();
        let top = c[c.len() - 1];
        let mut vr = vec![top.re; np];
        let mut vi = vec![top.im; np];
        for ck in c.iter().rev().skip(1) {
            for p in 0..np {
                let (dr, di) = (self.delta_re[p], self.delta_im[p]);
                let nr = vr[p] * dr - vi[p] * di + ck.re;
                let ni = vr[p] * di + vi[p] * dr + ck.im;
                vr[p] = nr;
                vi[p] = ni;
            }
        }
        let mut worst = 0.0f64;
        for p in 0..np {
            let (er, ei) = (vr[p] - self.target_re[p], vi[p] - self.target_im[p]);
            worst = worst.max(er * er + ei * ei);
        }
        let mut lipschitz = 0.0;
        let mut rp = 1.0;
        for (k, ck) in c.iter().enumerate().skip(1) {
            lipschitz += k as f64 * ck.norm() * rp;
            rp *= self.radius;
        }
        let horner = 4.0 * UNIT_ROUNDOFF * c.len() as f64 * c.iter().map(|z| z.norm()).sum::<f64>();
        PointEval {
            distance: worst.sqrt(),
            bound: jet.bound + horner,
            lipschitz,
        }
    }

    /// Evaluate at every sample point with the continuation directly.
    pub fn direct(&self, tau: f64) -> Result<PointEval> {
        let mut worst = 0.0f64;
        let mut bound = 0.0f64;
        for (p, (tr, ti)) in self.points.iter().zip(self.target_re.iter().zip(&self.target_im)) {
            let s = StripPoint::new(p.re, p.im + tau);
            let v = eval_continued_floor(s, &self.params, DIRECT_TARGET, FALLBACK_BOUND)?;
            worst = worst.max((v.value - Complex64::new(*tr, *ti)).norm());
            bound = bound.max(v.abs_error_bound);
        }
        Ok(PointEval {
            distance: worst,
            bound,
            lipschitz: f64::NAN,
        })
    }
}

struct KernelBufs<'a> {
    re: &'a mut [f64],
    im: &'a mut [f64],
    qr: &'a [f64],
    qi: &'a [f64],
    p1: &'a [f64],
    p2: &'a [f64],
    p3: &'a [f64],
}

/// For each of `nb` shifts: add the chunk's band moments into
/// `out[i * stride]`, then rotate every term to the next shift.
fn kernel_scalar(nb: usize, b: KernelBufs<'_>, out: &mut [[f64; 2 * BAND_ORDER]], stride: usize) {
    let groups = b.re.len() / LANES;
    for i in 0..nb {
        let mut a = [[0.0f64; LANES]; 2 * BAND_ORDER];
        for g in 0..groups {
            for l in 0..LANES {
                let n = g * LANES + l;
                let (x, y) = (b.re[n], b.im[n]);
                a[0][l] += x;
                a[1][l] += y;
                a[2][l] += x * b.p1[n];
                a[3][l] += y * b.p1[n];
                a[4][l] += x * b.p2[n];
                a[5][l] += y * b.p2[n];
                a[6][l] += x * b.p3[n];
                a[7][l] += y * b.p3[n];
                b.re[n] = x * b.qr[n] - y * b.qi[n];
                b.im[n] = x * b.qi[n] + y * b.qr[n];
            }
        }
        reduce_lanes(&a, &mut out[i * stride]);
    }
}

#[inline(always)]
fn reduce_lanes(a: &[[f64; LANES]; 2 * BAND_ORDER], slot: &mut [f64; 2 * BAND_ORDER]) {
    for (k, lanes) in a.iter().enumerate() {
        let mut s = 0.0;
        for v in lanes {
            s += v;
        }
        slot[k] += s;
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
fn kernel_avx512(nb: usize, b: KernelBufs<'_>, out: &mut [[f64; 2 * BAND_ORDER]], stride: usize) {
    use std::arch::x86_64::*;
    let groups = b.re.len() / LANES;
    for i in 0..nb {
        let mut acc = [_mm512_setzero_pd(); 2 * BAND_ORDER];
        for g in 0..groups {
            let o = g * LANES;
            // SAFETY: every buffer holds `groups * LANES` values.
            unsafe {
                let x = _mm512_loadu_pd(b.re.as_ptr().add(o));
                let y = _mm512_loadu_pd(b.im.as_ptr().add(o));
                let u1 = _mm512_loadu_pd(b.p1.as_ptr().add(o));
                let u2 = _mm512_loadu_pd(b.p2.as_ptr().add(o));
                let u3 = _mm512_loadu_pd(b.p3.as_ptr().add(o));
                let c = _mm512_loadu_pd(b.qr.as_ptr().add(o));
                let s = _mm512_loadu_pd(b.qi.as_ptr().add(o));
                acc[0] = _mm512_add_pd(acc[0], x);
                acc[1] = _mm512_add_pd(acc[1], y);
                acc[2] = _mm512_add_pd(acc[2], _mm512_mul_pd(x, u1));
                acc[3] = _mm512_add_pd(acc[3], _mm512_mul_pd(y, u1));
                acc[4] = _mm512_add_pd(acc[4], _mm512_mul_pd(x, u2));
                acc[5] = _mm512_add_pd(acc[5], _mm512_mul_pd(y, u2));
                acc[6] = _mm512_add_pd(acc[6], _mm512_mul_pd(x, u3));
                acc[7] = _mm512_add_pd(acc[7], _mm512_mul_pd(y, u3));
                let nx = _mm512_sub_pd(_mm512_mul_pd(x, c), _mm512_mul_pd(y, s));
                let ny = _mm512_add_pd(_mm512_mul_pd(x, s), _mm512_mul_pd(y, c));
                _mm512_storeu_pd(b.re.as_mut_ptr().add(o), nx);
                _mm512_storeu_pd(b.im.as_mut_ptr().add(o), ny);
            }
        }
        let mut a = [[0.0f64; LANES]; 2 * BAND_ORDER];
        for (dst, v) in a.iter_mut().zip(acc) {
            // SAFETY: `dst` holds LANES doubles.
            unsafe { _mm512_storeu_pd(dst.as_mut_ptr(), v) };
        }
        reduce_lanes(&a, &mut out[i * stride]);
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
fn kernel_avx2(nb: usize, b: KernelBufs<'_>, out: &mut [[f64; 2 * BAND_ORDER]], stride: usize) {
    use std::arch::x86_64::*;
    let groups = b.re.len() / LANES;
    for i in 0..nb {
        let mut acc = [_mm256_setzero_pd(); 4 * BAND_ORDER];
        for g in 0..groups {
            for half in 0..2 {
                let o = g * LANES + 4 * half;
                // SAFETY: every buffer holds `groups * LANES` values.
                unsafe {
                    let x = _mm256_loadu_pd(b.re.as_ptr().add(o));
                    let y = _mm256_loadu_pd(b.im.as_ptr().add(o));
                    let u1 = _mm256_loadu_pd(b.p1.as_ptr().add(o));
                    let u2 = _mm256_loadu_pd(b.p2.as_ptr().add(o));
                    let u3 = _mm256_loadu_pd(b.p3.as_ptr().add(o));
                    let c = _mm256_loadu_pd(b.qr.as_ptr().add(o));
                    let s = _mm256_loadu_pd(b.qi.as_ptr().add(o));
                    let a = &mut acc[half * 2 * BAND_ORDER..(half + 1) * 2 * BAND_ORDER];
                    a[0] = _mm256_add_pd(a[0], x);
                    a[1] = _mm256_add_pd(a[1], y);
                    a[2] = _mm256_add_pd(a[2], _mm256_mul_pd(x, u1));
                    a[3] = _mm256_add_pd(a[3], _mm256_mul_pd(y, u1));
                    a[4] = _mm256_add_pd(a[4], _mm256_mul_pd(x, u2));
                    a[5] = _mm256_add_pd(a[5], _mm256_mul_pd(y, u2));
                    a[6] = _mm256_add_pd(a[6], _mm256_mul_pd(x, u3));
                    a[7] = _mm256_add_pd(a[7], _mm256_mul_pd(y, u3));
                    let nx = _mm256_sub_pd(_mm256_mul_pd(x, c), _mm256_mul_pd(y, s));
                    let ny = _mm256_add_pd(_mm256_mul_pd(x, s), _mm256_mul_pd(y, c));
                    _mm256_storeu_pd(b.re.as_mut_ptr().add(o), nx);
                    _mm256_storeu_pd(b.im.as_mut_ptr().add(o), ny);
                }
            }
        }
        let mut a = [[0.0f64; LANES]; 2 * BAND_ORDER];
        for (k, dst) in a.iter_mut().enumerate() {
            // SAFETY: `dst` holds LANES doubles.
            unsafe {
                _mm256_storeu_pd(dst.as_mut_ptr(), acc[k]);
                _mm256_storeu_pd(dst.as_mut_ptr().add(4), acc[2 * BAND_ORDER + k]);
            }
        }
        reduce_lanes(&a, &mut out[i * stride]);
    }
}

/// Which kernel to run; all of them do the same lane-wise arithmetic (no
/// fused multiply-add), so the choice changes speed only, never the bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelIsa {
    Scalar,
    Avx2,
    Avx512,
}

impl KernelIsa {
    pub fn detect() -> Self {
        #[cfg(target_arch = "x86_64")]
        {
            if std::arch::is_x86_feature_detected!("avx512f") {
                return KernelIsa::Avx512;
            }
            if std::arch::is_x86_feature_detected!("avx2") {
                return KernelIsa::Avx2;
            }
        }
        KernelIsa::Scalar
    }

    pub fn is_available(self) -> bool {
        match self {
            KernelIsa::Scalar => true,
            #[cfg(target_arch = "x86_64")]
            KernelIsa::Avx2 => std::arch::is_x86_feature_detected!("avx2"),
            #[cfg(target_arch = "x86_64")]
            KernelIsa::Avx512 => std::arch::is_x86_feature_detected!("avx512f"),
            #[cfg(not(target_arch = "x86_64"))]
            _ => false,
        }
    }
}

fn run_kernel(isa: KernelIsa, nb: usize, b: KernelBufs<'_>, out: &mut [[f64; 2 * BAND_ORDER]], stride: usize) {
    match isa {
        #[cfg(target_arch = "x86_64")]
        // SAFETY: the engine only stores an isa that `is_available`.
        KernelIsa::Avx512 => unsafe { kernel_avx512(nb, b, out, stride) },
        #[cfg(target_arch = "x86_64")]
        // SAFETY: as above.
        KernelIsa::Avx2 => unsafe { kernel_avx2(nb, b, out, stride) },
        _ => kernel_scalar(nb, b, out, stride),
    }
}
