//! Python bindings. Point evaluations return `(value, error_bound)`;
//! `run` executes any CLI command from a dict of `key = value` settings
//! and returns the rendered JSON or CSV text.

use std::collections::HashMap;

use lerchlab::experiment::{parse_config_text, run as run_experiment, ExperimentConfig, ExperimentError};
use lerchlab::lerch::DEFAULT_ALPHA;
use lerchlab::random::second_moment as moment;
use lerchlab::{
    eval_continued as continued, eval_derivative as derivative, eval_random_series, eval_series as series,
    phi_pair_sum as phi, sample_phases, EvaluationResult, Execution, LabError, LerchParameters, RandomSeriesConfig,
    StripPoint,
};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn lab_err(e: LabError) -> PyErr {
    experiment_err(e.into())
}

fn experiment_err(e: ExperimentError) -> PyErr {
    match e {
        ExperimentError::Config(m) => PyValueError::new_err(m),
        ExperimentError::Compute(m) => PyRuntimeError::new_err(m),
    }
}

fn params(alpha: f64, lam: f64) -> PyResult<LerchParameters> {
    LerchParameters::new(alpha, lam).map_err(lab_err)
}

fn pair(r: EvaluationResult) -> (Complex64, f64) {
    (r.value, r.abs_error_bound)
}

/// L(s; alpha, lam) by analytic continuation, valid for all s except the
/// Hurwitz pole.
#[pyfunction]
#[pyo3(signature = (sigma, t, alpha = DEFAULT_ALPHA, lam = 1.0, tol = 1e-10))]
fn eval_continued(sigma: f64, t: f64, alpha: f64, lam: f64, tol: f64) -> PyResult<(Complex64, f64)> {
    continued(StripPoint::new(sigma, t), &params(alpha, lam)?, tol)
        .map(pair)
        .map_err(lab_err)
}

/// Partial sum of the defining series (Re s > 1).
#[pyfunction]
#[pyo3(signature = (sigma, t, alpha = DEFAULT_ALPHA, lam = 1.0, terms = 1000))]
fn eval_series(sigma: f64, t: f64, alpha: f64, lam: f64, terms: usize) -> PyResult<(Complex64, f64)> {
    series(StripPoint::new(sigma, t), &params(alpha, lam)?, terms)
        .map(pair)
        .map_err(lab_err)
}

/// k-th derivative in s.
#[pyfunction]
#[pyo3(signature = (sigma, t, k, alpha = DEFAULT_ALPHA, lam = 1.0, tol = 1e-10))]
fn eval_derivative(sigma: f64, t: f64, k: usize, alpha: f64, lam: f64, tol: f64) -> PyResult<(Complex64, f64)> {
    derivative(StripPoint::new(sigma, t), &params(alpha, lam)?, k, tol)
        .map(pair)
        .map_err(lab_err)
}

#[pyfunction]
fn phi_pair_sum(theta: f64, t: f64) -> PyResult<Complex64> {
    phi(theta, t).map_err(lab_err)
}

/// Truncated random model with the phases of `seed`.
#[pyfunction]
#[pyo3(signature = (sigma, t, n, seed, alpha = DEFAULT_ALPHA, lam = 1.0))]
fn random_series(sigma: f64, t: f64, n: usize, seed: u64, alpha: f64, lam: f64) -> PyResult<Complex64> {
    let cfg = RandomSeriesConfig::new(n, params(alpha, lam)?).map_err(lab_err)?;
    let w = sample_phases(seed, n).map_err(lab_err)?;
    eval_random_series(StripPoint::new(sigma, t), &cfg, &w).map_err(lab_err)
}

/// Expected |L_N(s)|^2 of the random model.
#[pyfunction]
#[pyo3(signature = (sigma, n, alpha = DEFAULT_ALPHA, lam = 1.0))]
fn second_moment(sigma: f64, n: usize, alpha: f64, lam: f64) -> PyResult<f64> {
    let cfg = RandomSeriesConfig::new(n, params(alpha, lam)?).map_err(lab_err)?;
    Ok(moment(&cfg, sigma))
}

/// Settings echoed in a previous output, or read from a config file's text.
#[pyfunction]
fn parse_config(text: &str) -> PyResult<Vec<(String, String)>> {
    parse_config_text(text).map_err(experiment_err)
}

/// Run a CLI command (`eval`, `scan`, `probe`, `random`, `bergman`, `phi`)
/// and return its output text. Releases the GIL while computing.
#[pyfunction]
#[pyo3(signature = (command, settings, threads = None))]
fn run(py: Python<'_>, command: &str, settings: HashMap<String, String>, threads: Option<usize>) -> PyResult<String> {
    let mut entries: Vec<(String, String)> = settings.into_iter().collect();
    entries.sort();
    let cfg = ExperimentConfig::from_sources(command, &[entries]).map_err(experiment_err)?;
    let threads = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(PyValueError::new_err("threads must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let out = py
        .detach(|| pool.install(|| run_experiment(&cfg, Execution::Parallel)))
        .map_err(experiment_err)?;
    Ok(out.body)
}

#[pymodule]
fn pylerch(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DEFAULT_ALPHA", DEFAULT_ALPHA)?;
    m.add_function(wrap_pyfunction!(eval_continued, m)?)?;
    m.add_function(wrap_pyfunction!(eval_series, m)?)?;
    m.add_function(wrap_pyfunction!(eval_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(phi_pair_sum, m)?)?;
    m.add_function(wrap_pyfunction!(random_series, m)?)?;
    m.add_function(wrap_pyfunction!(second_moment, m)?)?;
    m.add_function(wrap_pyfunction!(parse_config, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
