//! Scans over vertical shifts `τ` for simultaneous approximation of several
//! targets by `L(s + iτ; α, λ_j)`.

pub mod engine;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fmt17;
use crate::geometry::{sup_distance, CompactSet, TargetPolynomial};
use crate::lerch::{eval_continued_floor, eval_derivative_floor, LerchParameters, StripPoint, MAX_DERIVATIVE};
use engine::{ComponentEngine, PointEval, BLOCK};

/// Truncation budget of the scan engine.
pub const ENGINE_TOL: f64 = 1e-10;
/// Grid minima refined by golden-section search.
pub const REFINE_CANDIDATES: usize = 8;
pub const GOLDEN_ITERATIONS: usize = 40;
/// Radius of the disk on which probe jets are certified.
pub const PROBE_RADIUS: f64 = 0.05;
const DIRECT_TARGET: f64 = 1e-10;

/// `m` compact sets with targets, one per `λ_j`, all sharing `α`.
#[derive(Debug, Clone)]
pub struct JointTarget {
    components: Vec<(CompactSet, TargetPolynomial)>,
    params: Vec<LerchParameters>,
}

impl JointTarget {
    pub fn new(components: Vec<(CompactSet, TargetPolynomial)>, params: Vec<LerchParameters>) -> Result<Self> {
        if components.len() != params.len() {
            return Err(LabError::LengthMismatch {
                left: components.len(),
                right: params.len(),
            });
        }
        validate_family(&params)?;
        for (k, _) in &components {
            k.shape().validate()?;
        }
        Ok(JointTarget { components, params })
    }

    pub fn m(&self) -> usize {
        self.params.len()
    }

    pub fn components(&self) -> &[(CompactSet, TargetPolynomial)] {
        &self.components
    }

    pub fn params(&self) -> &[LerchParameters] {
        &self.params
    }
}

/// At least one component, one shared `α`, pairwise distinct `λ`.
pub fn validate_family(params: &[LerchParameters]) -> Result<()> {
    let Some(first) = params.first() else {
        return Err(LabError::InvalidParameter("need at least one component".into()));
    };
    if let Some(p) = params.iter().find(|p| p.alpha() != first.alpha()) {
        return Err(LabError::InvalidParameter(format!(
            "all components must share alpha: {} vs {}",
            first.alpha(),
            p.alpha()
        )));
    }
    for (i, a) in params.iter().enumerate() {
        for b in &params[i + 1..] {
            if (a.lambda() - b.lambda()).abs() < 1e-9 {
                return Err(LabError::DuplicateLambda(a.lambda(), b.lambda()));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub tau_max: f64,
    pub tau_step: f64,
    pub epsilon: f64,
    pub refine: bool,
}

impl ScanConfig {
    pub fn new(tau_max: f64, tau_step: f64, epsilon: f64, refine: bool) -> Result<Self> {
        let cfg = ScanConfig {
            tau_max,
            tau_step,
            epsilon,
            refine,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_step > 0.0 && self.tau_step.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "tau_step must be positive: {}",
                self.tau_step
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(LabError::InvalidParameter(format!(
                "epsilon must be positive: {}",
                self.epsilon
            )));
        }
        if !(self.tau_max >= self.tau_step && self.tau_max.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "tau_max must be finite and >= tau_step: {}",
                self.tau_max
            )));
        }
        Ok(())
    }

    /// Index of the last grid point `i·step ≤ tau_max`.
    pub fn last_index(&self) -> usize {
        (self.tau_max / self.tau_step + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub hit_intervals: Vec<(f64, f64)>,
    pub hit_measure: f64,
    pub density: f64,
    pub best_tau: f64,
    pub best_distance: f64,
    pub grid_points: usize,
    pub grid_hits: usize,
    /// Largest certified error of a grid distance.
    pub max_error_bound: f64,
    /// Largest bound on `|∂_s L|` over the sets, for judging the step.
    pub max_derivative_bound: f64,
}

/// Grid distances of a scan, in `τ` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTrace {
    pub tau_step: f64,
    pub tau_max: f64,
    pub distances: Vec<f64>,
    pub bounds: Vec<f64>,
    pub lipschitz: Vec<f64>,
}

pub const TRACE_CSV_HEADER: &str = "tau,distance";

impl ScanTrace {
    pub fn tau(&self, i: usize) -> f64 {
        i as f64 * self.tau_step
    }

    /// Indices of grid points with distance below `epsilon`.
    pub fn hits(&self, epsilon: f64) -> Vec<usize> {
        (0..self.distances.len())
            .filter(|&i| self.distances[i] < epsilon)
            .collect()
    }

    /// Each hit owns the part of `[0, tau_max]` nearer to it than to any
    /// other grid point; adjacent cells merge.
    pub fn hit_intervals(&self, epsilon: f64) -> Vec<(f64, f64)> {
        let last = self.distances.len() - 1;
        let cell = |i: usize| {
            let lo = if i == 0 { 0.0 } else { (i as f64 - 0.5) * self.tau_step };
            let hi = if i == last {
                self.tau_max
            } else {
                (i as f64 + 0.5) * self.tau_step
            };
            (lo, hi)
        };
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut prev: Option<usize> = None;
        for i in self.hits(epsilon) {
            let (lo, hi) = cell(i);
            match (prev, out.last_mut()) {
                (Some(p), Some(last)) if p + 1 == i => last.1 = hi,
                _ => out.push((lo, hi)),
            }
            prev = Some(i);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(48 * self.distances.len());
        s.push_str(TRACE_CSV_HEADER);
        s.push('\n');
        for (i, d) in self.distances.iter().enumerate() {
            s.push_str(&format!("{},{}\n", fmt17(self.tau(i)), fmt17(*d)));
        }
        s
    }
}

/// How blocks of shifts are scheduled; the results do not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Parallel,
    Serial,
}

/// Max over components of the sampled sup distance at `τ`, by direct
/// evaluation at every sample point.
pub fn joint_distance(tau: f64, tgt: &JointTarget) -> Result<f64> {
    let mut worst = 0.0f64;
    for ((k, f), p) in tgt.components.iter().zip(&tgt.params) {
        let points = k.sample_points();
        let values = points
            .iter()
            .map(|z| eval_continued_floor(StripPoint::new(z.re, z.im + tau), p, DIRECT_TARGET, 1e-6).map(|r| r.value))
            .collect::<Result<Vec<_>>>()?;
        worst = worst.max(sup_distance(&values, f, &points)?.value);
    }
    Ok(worst)
}

fn engines(tgt: &JointTarget, tau_max: f64, step: f64) -> Result<Vec<ComponentEngine>> {
    tgt.components
        .iter()
        .zip(&tgt.params)
        .map(|((k, f), p)| ComponentEngine::new(*p, k, f, tau_max, step, ENGINE_TOL))
        .collect()
}

fn joint_block(engines: &[ComponentEngine], tau0: f64, nb: usize) -> Result<Vec<PointEval>> {
    let mut out: Option<Vec<PointEval>> = None;
    for e in engines {
        let part = e.eval_block(tau0, nb)?;
        out = Some(match out {
            None => part,
            Some(acc) => acc
                .into_iter()
                .zip(part)
                .map(|(a, b)| PointEval {
                    distance: a.distance.max(b.distance),
                    bound: a.bound.max(b.bound),
                    lipschitz: a.lipschitz.max(b.lipschitz),
                })
                .collect(),
        });
    }
    Ok(out.expect("at least one component"))
}

/// Grid distances only.
pub fn scan_trace(tgt: &JointTarget, cfg: &ScanConfig, exec: Execution) -> Result<ScanTrace> {
    cfg.validate()?;
    let engines = engines(tgt, cfg.tau_max, cfg.tau_step)?;
    trace_with(&engines, cfg, exec)
}

fn trace_with(engines: &[ComponentEngine], cfg: &ScanConfig, exec: Execution) -> Result<ScanTrace> {
    let n = cfg.last_index() + 1;
    let blocks: Vec<(usize, usize)> = (0..n)
        .step_by(BLOCK)
        .map(|start| (start, (n - start).min(BLOCK)))
        .collect();
    let run = |&(start, nb): &(usize, usize)| joint_block(engines, start as f64 * cfg.tau_step, nb);
    let parts: Vec<Vec<PointEval>> = match exec {
        Execution::Parallel => blocks.par_iter().map(run).collect::<Result<_>>()?,
        Execution::Serial => blocks.iter().map(run).collect::<Result<_>>()?,
    };
    let evals: Vec<PointEval> = parts.into_iter().flatten().collect();
    Ok(ScanTrace {
        tau_step: cfg.tau_step,
        tau_max: cfg.tau_max,
        distances: evals.iter().map(|e| e.distance).collect(),
        bounds: evals.iter().map(|e| e.bound).collect(),
        lipschitz: evals.iter().map(|e| e.lipschitz).collect(),
    })
}

pub fn scan(tgt: &JointTarget, cfg: &ScanConfig) -> Result<DensityReport> {
    Ok(scan_with(tgt, cfg, Execution::Parallel)?.0)
}

/// Scan and keep the grid trace.
pub fn scan_with(tgt: &JointTarget, cfg: &ScanConfig, exec: Execution) -> Result<(DensityReport, ScanTrace)> {
    cfg.validate()?;
    let engines = engines(tgt, cfg.tau_max, cfg.tau_step)?;
    let trace = trace_with(&engines, cfg, exec)?;
    let report = report_from_trace(&trace, cfg, |tau| Ok(joint_block(&engines, tau, 1)?[0].distance))?;
    Ok((report, trace))
}

/// Summarise a trace at `cfg.epsilon`; `distance` evaluates off-grid
/// shifts for the refinement.
pub fn report_from_trace(
    trace: &ScanTrace,
    cfg: &ScanConfig,
    distance: impl Fn(f64) -> Result<f64>,
) -> Result<DensityReport> {
    let hit_intervals = trace.hit_intervals(cfg.epsilon);
    let hit_measure: f64 = hit_intervals.iter().map(|(lo, hi)| hi - lo).sum();
    let d = &trace.distances;
    let mut best = 0;
    for i in 1..d.len() {
        if d[i] < d[best] {
            best = i;
        }
    }
    let (mut best_tau, mut best_distance) = (trace.tau(best), d[best]);
    if cfg.refine {
        for i in local_minima(d, REFINE_CANDIDATES) {
            let lo = if i == 0 { 0.0 } else { trace.tau(i - 1) };
            let hi = if i + 1 == d.len() {
                trace.tau(i)
            } else {
                trace.tau(i + 1)
            };
            let (t, v) = golden_section(&distance, lo, hi, GOLDEN_ITERATIONS)?;
            if v < best_distance {
                best_tau = t;
                best_distance = v;
            }
        }
    }
    Ok(DensityReport {
        grid_points: d.len(),
        grid_hits: trace.hits(cfg.epsilon).len(),
        density: hit_measure / cfg.tau_max,
        hit_intervals,
        hit_measure,
        best_tau,
        best_distance,
        max_error_bound: trace.bounds.iter().copied().fold(0.0, f64::max),
        max_derivative_bound: trace.lipschitz.iter().copied().fold(0.0, f64::max),
    })
}

/// The `k` smallest grid local minima (ties by position).
fn local_minima(d: &[f64], k: usize) -> Vec<usize> {
    let n = d.len();
    let mut mins: Vec<usize> = (0..n)
        .filter(|&i| (i == 0 || d[i] <= d[i - 1]) && (i + 1 == n || d[i] <= d[i + 1]))
        .collect();
    mins.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    mins.truncate(k);
    mins
}

/// Golden-section minimisation on `[a, b]`; returns the best point seen.
pub fn golden_section(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, iterations: usize) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..iterations {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub t_best: f64,
    /// Max-norm distance at `t_best`, recomputed with `eval_derivative`.
    pub distance: f64,
    /// Distance at `t_best` as seen by the scan.
    pub grid_distance: f64,
    pub grid_points: usize,
    /// Grid points within `epsilon` of the target vector.
    pub grid_hits: usize,
    /// Largest derivative error bound over the grid.
    pub max_error_bound: f64,
}

/// Scan `t ∈ [0, t_max]` for `t` with `h(t) = (L_j^{(k)}(σ + it))_{j, k<N}`
/// closest to `target` in max norm; `target` is component-major.
#[allow(clippy::too_many_arguments)]
pub fn dense_image_probe(
    params: &[LerchParameters],
    sigma: f64,
    n: usize,
    target: &[Complex64],
    epsilon: f64,
    t_max: f64,
    t_step: f64,
    exec: Execution,
) -> Result<ProbeReport> {
    validate_family(params)?;
    if !(sigma > 0.5 && sigma < 1.0) {
        return Err(LabError::OutsideStrip(format!("sigma = {sigma}")));
    }
    if n == 0 || n > MAX_DERIVATIVE + 1 {
        return Err(LabError::InvalidParameter(format!(
            "N must be in 1..={}: {n}",
            MAX_DERIVATIVE + 1
        )));
    }
    if target.len() != params.len() * n {
        return Err(LabError::LengthMismatch {
            left: target.len(),
            right: params.len() * n,
        });
    }
    let cfg = ScanConfig::new(t_max, t_step, epsilon, false)?;
    let center = Complex64::new(sigma, 0.0);
    let engines: Vec<ComponentEngine> = params
        .iter()
        .map(|p| ComponentEngine::jets_only(*p, center, PROBE_RADIUS, t_max, t_step, ENGINE_TOL))
        .collect();
    let factorial: Vec<f64> = (0..n)
        .scan(1.0, |f, k| {
            if k > 0 {
                *f *= k as f64;
            }
            Some(*f)
        })
        .collect();

    let count = cfg.last_index() + 1;
    let blocks: Vec<(usize, usize)> = (0..count)
        .step_by(BLOCK)
        .map(|start| (start, (count - start).min(BLOCK)))
        .collect();
    let run = |&(start, nb): &(usize, usize)| -> Result<Vec<(f64, f64)>> {
        let tau0 = start as f64 * t_step;
        let mut out = vec![(0.0f64, 0.0f64); nb];
        for (j, e) in engines.iter().enumerate() {
            let jets = e.block_jets(tau0, nb)?;
            for (i, jet) in jets.into_iter().enumerate() {
                let (dist, err) = match jet {
                    Some(jet) => {
                        let mut dist = 0.0f64;
                        let mut err = 0.0f64;
                        for k in 0..n {
                            let c = jet.coeffs.get(k).copied().unwrap_or_default();
                            dist = dist.max((c * factorial[k] - target[j * n + k]).norm());
                            err = err.max(factorial[k] * jet.bound / PROBE_RADIUS.powi(k as i32));
                        }
                        (dist, err)
                    }
                    None => {
                        let t = tau0 + i as f64 * t_step;
                        direct_probe_distance(&params[j], sigma, t, &target[j * n..(j + 1) * n])?
                    }
                };
                out[i].0 = out[i].0.max(dist);
                out[i].1 = out[i].1.max(err);
            }
        }
        Ok(out)
    };
    let parts: Vec<Vec<(f64, f64)>> = match exec {
        Execution::Parallel => blocks.par_iter().map(run).collect::<Result<_>>()?,
        Execution::Serial => blocks.iter().map(run).collect::<Result<_>>()?,
    };
    let grid: Vec<(f64, f64)> = parts.into_iter().flatten().collect();
    let mut best = 0;
    for i in 1..grid.len() {
        if grid[i].0 < grid[best].0 {
            best = i;
        }
    }
    let t_best = best as f64 * t_step;
    let mut distance = 0.0f64;
    for (j, p) in params.iter().enumerate() {
        distance = distance.max(direct_probe_distance(p, sigma, t_best, &target[j * n..(j + 1) * n])?.0);
    }
    Ok(ProbeReport {
        t_best,
        distance,
        grid_distance: grid[best].0,
        grid_points: grid.len(),
        grid_hits: grid.iter().filter(|g| g.0 < epsilon).count(),
        max_error_bound: grid.iter().map(|g| g.1).fold(0.0, f64::max),
    })
}

/// `max_k |L^{(k)}(σ + it) − target[k]|` and its error bound.
fn direct_probe_distance(p: &LerchParameters, sigma: f64, t: f64, target: &[Complex64]) -> Result<(f64, f64)> {
    let mut dist = 0.0f64;
    let mut err = 0.0f64;
    for (k, want) in target.iter().enumerate() {
        let r = eval_derivative_floor(StripPoint::new(sigma, t), p, k, 1e-9, 1e-5)?;
        dist = dist.max((r.value - want).norm());
        err = err.max(r.abs_error_bound);
    }
    Ok((dist, err))
}

/// `h(t)` in component-major order, by `eval_derivative`.
pub fn derivative_vector(params: &[LerchParameters], sigma: f64, n: usize, t: f64) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(params.len() * n);
    for p in params {
        for k in 0..n {
            out.push(eval_derivative_floor(StripPoint::new(sigma, t), p, k, 1e-10, 1e-5)?.value);
        }
    }
    Ok(out)
}
