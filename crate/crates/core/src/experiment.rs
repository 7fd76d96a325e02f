//! Reproducible experiment configs: `key = value` settings for each
//! command, their validation, and rendering of results as JSON or CSV with
//! the effective config echoed in the header.
//!
//! A rendered output can itself be read back as a config: JSON documents
//! carry a `config` object, CSV files carry `#= key = value` lines.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::bergman::{
    divergence_diagnostic_with, phi_pair_sum, BergmanDomain, BergmanElement, DiagnosticReport, TupleElement,
};
use crate::error::LabError;
use crate::fmt17;
use crate::geometry::{CompactSet, Shape, TargetPolynomial};
use crate::lerch::{eval_continued, eval_derivative, eval_series, LerchParameters, StripPoint};
use crate::random::{eval_random_series, sample_phases, second_moment, tail_estimate, RandomSeriesConfig};
use crate::search::{
    dense_image_probe, scan_with, DensityReport, Execution, JointTarget, ScanConfig, ScanTrace, TRACE_CSV_HEADER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyDefault {
    Required,
    Value(&'static str),
    /// Optional with a computed default; not echoed unless given.
    Unset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeySpec {
    pub name: &'static str,
    pub default: KeyDefault,
    pub help: &'static str,
    /// Boolean switch: `--name` alone means `true`.
    pub switch: bool,
}

const fn key(name: &'static str, default: KeyDefault, help: &'static str) -> KeySpec {
    KeySpec {
        name,
        default,
        help,
        switch: false,
    }
}

const fn switch(name: &'static str, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec {
        name,
        default: KeyDefault::Value(default),
        help,
        switch: true,
    }
}

use KeyDefault::{Required, Unset, Value as Def};

const FORMAT: KeySpec = key("format", Def("json"), "output format: json or csv");
const ALPHA: KeySpec = key("alpha", Def("1/pi"), "shared shift alpha in (0, 1]");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommandSpec {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [KeySpec],
}

pub const COMMANDS: &[CommandSpec] = &[
    CommandSpec {
        name: "eval",
        about: "Evaluate L(s; alpha, lambda) or a derivative at one point",
        keys: &[
            key("sigma", Required, "real part of s"),
            key("t", Def("0"), "imaginary part of s"),
            ALPHA,
            key("lambda", Def("1"), "lambda in (0, 1]"),
            key("method", Def("continued"), "continued, series or derivative"),
            key("terms", Def("1000"), "number of terms for method = series"),
            key("k", Def("1"), "derivative order for method = derivative"),
            key("tol", Def("1e-10"), "absolute error target"),
            FORMAT,
        ],
    },
    CommandSpec {
        name: "scan",
        about: "Scan shifts tau for joint approximation of targets",
        keys: &[
            ALPHA,
            key("lambdas", Required, "comma-separated distinct lambdas"),
            key("shape", Def("disk"), "disk or rectangle"),
            key("centers", Unset, "disk centers, one complex per lambda"),
            key("radii", Def("0.02"), "disk radii, one value or one per lambda"),
            key("corners-lo", Unset, "rectangle lower-left corners"),
            key("corners-hi", Unset, "rectangle upper-right corners"),
            key(
                "targets",
                Required,
                "target polynomials, ';' between components, ',' between coefficients in powers of (s - center)",
            ),
            key("boundary-samples", Def("256"), "boundary sample points per set"),
            key("interior-samples", Def("64"), "interior sample points per set"),
            key("tau-max", Required, "scan length T"),
            key("tau-step", Def("0.05"), "grid step"),
            key("epsilon", Required, "approximation threshold"),
            switch("refine", "true", "golden-section refinement of grid minima"),
            switch("trace", "false", "emit the full (tau, distance) trace"),
            FORMAT,
        ],
    },
    CommandSpec {
        name: "probe",
        about: "Search t for derivative vectors near a target",
        keys: &[
            ALPHA,
            key("lambdas", Required, "comma-separated distinct lambdas"),
            key("sigma", Required, "real part, in (1/2, 1)"),
            key("n", Def("1"), "number of derivatives N (orders 0..N-1)"),
            key("target", Required, "m*N complex numbers, component-major"),
            key("epsilon", Def("0.1"), "threshold for counting grid hits"),
            key("t-max", Required, "largest t"),
            key("t-step", Def("0.02"), "grid step"),
            FORMAT,
        ],
    },
    CommandSpec {
        name: "random",
        about: "Evaluate the truncated random model for consecutive seeds",
        keys: &[
            ALPHA,
            key("lambda", Def("1"), "lambda in (0, 1]"),
            key("sigma", Def("0.75"), "real part of s, above 1/2"),
            key("t", Def("0"), "imaginary part of s"),
            key("n", Def("1000"), "truncation N"),
            key("seed", Def("0"), "first seed"),
            key("samples", Def("1"), "number of consecutive seeds"),
            FORMAT,
        ],
    },
    CommandSpec {
        name: "bergman",
        about: "Windowed-sum divergence diagnostic on a rectangle U",
        keys: &[
            ALPHA,
            key("lambdas", Required, "comma-separated distinct lambdas"),
            key("domain", Def("0.6, 0.9, 0, 1"), "sigma1, sigma2, t1, t2"),
            key("quadrature", Def("32"), "Gauss-Legendre order per axis"),
            key(
                "g",
                Required,
                "polynomials in (s - centre of U), ';' between components",
            ),
            key("x", Required, "comma-separated window positions"),
            key("window-scale", Def("1"), "window scale B"),
            key(
                "window-exponent",
                Unset,
                "window exponent (default: number of components)",
            ),
            FORMAT,
        ],
    },
    CommandSpec {
        name: "phi",
        about: "Closed-form geometric sum of e(theta n) over 0 <= n <= t",
        keys: &[
            key("theta", Required, "non-integer theta"),
            key("t", Required, "upper limit t >= 0"),
            FORMAT,
        ],
    },
];

pub fn command(name: &str) -> Option<&'static CommandSpec> {
    COMMANDS.iter().find(|c| c.name == name)
}

/// Failure of an experiment, split by who is at fault.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentError {
    /// Bad or inconsistent settings.
    Config(String),
    /// The computation itself failed.
    Compute(String),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Compute(_) => 1,
        }
    }
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentError::Config(m) => write!(f, "config error: {m}"),
            ExperimentError::Compute(m) => write!(f, "computation error: {m}"),
        }
    }
}

impl std::error::Error for ExperimentError {}

impl From<LabError> for ExperimentError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::InvalidParameter(_)
            | LabError::Domain { .. }
            | LabError::OutsideStrip(_)
            | LabError::LengthMismatch { .. }
            | LabError::DuplicateLambda(..)
            | LabError::WindowTooLarge { .. } => ExperimentError::Config(e.to_string()),
            _ => ExperimentError::Compute(e.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, ExperimentError>;

fn config_err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

/// Read `key = value` entries from a config file or from a previous
/// output (JSON document or CSV with `#=` lines).
pub fn parse_config_text(text: &str) -> Res<Vec<(String, String)>> {
    if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(text).map_err(|e| config_err(format!("bad JSON config: {e}")))?;
        let Some(map) = doc.get("config").and_then(Value::as_object) else {
            return Err(config_err("JSON document has no config object"));
        };
        return map
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => Ok((k.clone(), s.clone())),
                other => Err(config_err(format!(
                    "config value for {k} must be a string, got {other}"
                ))),
            })
            .collect();
    }
    let mut out = Vec::new();
    let mut echoed = false;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let body = if let Some(rest) = line.strip_prefix("#=") {
            echoed = true;
            rest
        } else if line.is_empty() || line.starts_with('#') {
            continue;
        } else {
            line.split('#').next().unwrap_or("")
        };
        match body.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => out.push((k.trim().to_string(), v.trim().to_string())),
            // data rows of an echoed CSV output end the header
            _ if echoed => break,
            _ => {
                return Err(config_err(format!(
                    "line {}: expected key = value, got {raw:?}",
                    no + 1
                )))
            }
        }
    }
    Ok(out)
}

/// Settings of one command after merging file and flag values.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    spec: &'static CommandSpec,
    values: BTreeMap<&'static str, String>,
    given: Vec<&'static str>,
}

impl ExperimentConfig {
    /// Later sources override earlier ones; unknown keys are errors.
    pub fn from_sources(command_name: &str, sources: &[Vec<(String, String)>]) -> Res<Self> {
        let spec = command(command_name).ok_or_else(|| config_err(format!("unknown command {command_name}")))?;
        let mut values = BTreeMap::new();
        let mut given = Vec::new();
        for source in sources {
            for (k, v) in source {
                if k == "command" {
                    if v != spec.name {
                        return Err(config_err(format!("config is for command {v}, not {}", spec.name)));
                    }
                    continue;
                }
                let Some(ks) = spec.keys.iter().find(|ks| ks.name == k) else {
                    return Err(config_err(format!("unknown key {k} for command {}", spec.name)));
                };
                values.insert(ks.name, v.clone());
                if !given.contains(&ks.name) {
                    given.push(ks.name);
                }
            }
        }
        for ks in spec.keys {
            match ks.default {
                Def(d) => {
                    values.entry(ks.name).or_insert_with(|| d.to_string());
                }
                Required if !values.contains_key(ks.name) => {
                    return Err(config_err(format!("missing required key {}", ks.name)));
                }
                _ => {}
            }
        }
        Ok(ExperimentConfig { spec, values, given })
    }

    pub fn command(&self) -> &'static str {
        self.spec.name
    }

    /// Effective settings in declaration order.
    pub fn entries(&self) -> Vec<(&'static str, &str)> {
        self.spec
            .keys
            .iter()
            .filter_map(|ks| self.values.get(ks.name).map(|v| (ks.name, v.as_str())))
            .collect()
    }

    pub fn was_given(&self, key: &str) -> bool {
        self.given.contains(&key)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn req(&self, key: &str) -> Res<&str> {
        self.raw(key).ok_or_else(|| config_err(format!("missing key {key}")))
    }

    fn real(&self, key: &str) -> Res<f64> {
        parse_real(self.req(key)?).map_err(|e| config_err(format!("{key}: {e}")))
    }

    fn count(&self, key: &str) -> Res<usize> {
        let v = self.req(key)?;
        v.trim()
            .parse()
            .map_err(|_| config_err(format!("{key}: expected a non-negative integer, got {v:?}")))
    }

    fn seed(&self, key: &str) -> Res<u64> {
        let v = self.req(key)?;
        v.trim()
            .parse()
            .map_err(|_| config_err(format!("{key}: expected an unsigned integer, got {v:?}")))
    }

    fn flag(&self, key: &str) -> Res<bool> {
        match self.req(key)?.trim() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(config_err(format!("{key}: expected true or false, got {v:?}"))),
        }
    }

    fn reals(&self, key: &str) -> Res<Vec<f64>> {
        split_list(self.req(key)?, ',')
            .map(|s| parse_real(s).map_err(|e| config_err(format!("{key}: {e}"))))
            .collect()
    }

    fn complexes(&self, key: &str) -> Res<Vec<Complex64>> {
        split_list(self.req(key)?, ',')
            .map(|s| parse_complex(s).map_err(|e| config_err(format!("{key}: {e}"))))
            .collect()
    }

    fn polynomials(&self, key: &str) -> Res<Vec<Vec<Complex64>>> {
        split_list(self.req(key)?, ';')
            .map(|poly| {
                split_list(poly, ',')
                    .map(|s| parse_complex(s).map_err(|e| config_err(format!("{key}: {e}"))))
                    .collect()
            })
            .collect()
    }

    fn format(&self) -> Res<Format> {
        match self.req("format")?.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            v => Err(config_err(format!("format must be json or csv, got {v:?}"))),
        }
    }

    fn params(&self, key: &str) -> Res<Vec<LerchParameters>> {
        let alpha = self.real("alpha")?;
        self.reals(key)?
            .into_iter()
            .map(|l| LerchParameters::new(alpha, l).map_err(Into::into))
            .collect()
    }
}

fn split_list(s: &str, sep: char) -> impl Iterator<Item = &str> {
    s.split(sep).map(str::trim).filter(|p| !p.is_empty())
}

/// A real number, `pi`, or a quotient `a/b` of those.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    fn atom(s: &str) -> std::result::Result<f64, String> {
        let s = s.trim();
        match s {
            "pi" => Ok(PI),
            "-pi" => Ok(-PI),
            _ => s.parse::<f64>().map_err(|_| format!("not a number: {s:?}")),
        }
    }
    match s.split_once('/') {
        Some((a, b)) => Ok(atom(a)? / atom(b)?),
        None => atom(s),
    }
}

/// `a`, `bi`, `a+bi` or `a-bi`.
pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(parse_real(&t)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |s: &str| match s {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => parse_real(s),
    };
    match split {
        Some(i) => Ok(Complex64::new(parse_real(&body[..i])?, imag(&body[i..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Rendered result plus a one-line human summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub body: String,
    pub summary: String,
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn json_document(cfg: &ExperimentConfig, result: Value) -> String {
    let config: serde_json::Map<String, Value> = cfg
        .entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
        .collect();
    let mut doc = serde_json::Map::new();
    doc.insert("command".into(), Value::String(cfg.command().into()));
    doc.insert("config".into(), Value::Object(config));
    doc.insert("result".into(), result);
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("serialisable");
    s.push('\n');
    s
}

fn csv_document(cfg: &ExperimentConfig, notes: &[(&str, String)], header: &str, rows: &str) -> String {
    let mut s = format!("# lerchlab {}\n", cfg.command());
    for (k, v) in cfg.entries() {
        s.push_str(&format!("#= {k} = {v}\n"));
    }
    for (k, v) in notes {
        s.push_str(&format!("# {k}: {v}\n"));
    }
    s.push_str(header);
    s.push('\n');
    s.push_str(rows);
    s
}

/// Validate and run; `exec` schedules the parallel parts.
pub fn run(cfg: &ExperimentConfig, exec: Execution) -> Res<Output> {
    match cfg.command() {
        "eval" => run_eval(cfg),
        "scan" => run_scan(cfg, exec),
        "probe" => run_probe(cfg, exec),
        "random" => run_random(cfg, exec),
        "bergman" => run_bergman(cfg),
        "phi" => run_phi(cfg),
        other => Err(config_err(format!("unknown command {other}"))),
    }
}

fn run_eval(cfg: &ExperimentConfig) -> Res<Output> {
    let format = cfg.format()?;
    let s = StripPoint::new(cfg.real("sigma")?, cfg.real("t")?);
    let p = LerchParameters::new(cfg.real("alpha")?, cfg.real("lambda")?)?;
    let tol = cfg.real("tol")?;
    let method = cfg.req("method")?.trim().to_string();
    let r = match method.as_str() {
        "continued" => eval_continued(s, &p, tol)?,
        "series" => eval_series(s, &p, cfg.count("terms")?)?,
        "derivative" => eval_derivative(s, &p, cfg.count("k")?, tol)?,
        m => {
            return Err(config_err(format!(
                "method must be continued, series or derivative, got {m:?}"
            )))
        }
    };
    let summary = format!(
        "L = {} {:+}i (error <= {:e})",
        r.value.re, r.value.im, r.abs_error_bound
    );
    let body = match format {
        Format::Json => json_document(
            cfg,
            json!({
                "value": complex_json(r.value),
                "abs_error_bound": r.abs_error_bound,
                "terms_used": r.terms_used,
            }),
        ),
        Format::Csv => csv_document(
            cfg,
            &[],
            "sigma,t,re,im,abs_error_bound,terms_used",
            &format!(
                "{},{},{},{},{},{}\n",
                fmt17(s.sigma),
                fmt17(s.t),
                fmt17(r.value.re),
                fmt17(r.value.im),
                fmt17(r.abs_error_bound),
                r.terms_used
            ),
        ),
    };
    Ok(Output { body, summary })
}

/// Build the joint target and scan settings of a `scan` config.
pub fn scan_setup(cfg: &ExperimentConfig) -> Res<(JointTarget, ScanConfig)> {
    let params = cfg.params("lambdas")?;
    let m = params.len();
    let per_component = |v: Vec<f64>, what: &str| -> Res<Vec<f64>> {
        match v.len() {
            1 => Ok(vec![v[0]; m]),
            n if n == m => Ok(v),
            n => Err(config_err(format!("{what}: expected 1 or {m} values, got {n}"))),
        }
    };
    let shapes: Vec<Shape> = match cfg.req("shape")?.trim() {
        "disk" => {
            if cfg.raw("centers").is_none() {
                return Err(config_err("shape = disk needs centers"));
            }
            let centers = cfg.complexes("centers")?;
            let radii = per_component(cfg.reals("radii")?, "radii")?;
            if centers.len() != m {
                return Err(config_err(format!(
                    "centers: expected {m} values, got {}",
                    centers.len()
                )));
            }
            centers
                .into_iter()
                .zip(radii)
                .map(|(center, radius)| Shape::Disk { center, radius })
                .collect()
        }
        "rectangle" => {
            if cfg.raw("corners-lo").is_none() || cfg.raw("corners-hi").is_none() {
                return Err(config_err("shape = rectangle needs corners-lo and corners-hi"));
            }
            let lo = cfg.complexes("corners-lo")?;
            let hi = cfg.complexes("corners-hi")?;
            if lo.len() != m || hi.len() != m {
                return Err(config_err(format!("rectangle corners: expected {m} of each")));
            }
            lo.into_iter()
                .zip(hi)
                .map(|(corner_lo, corner_hi)| Shape::Rectangle { corner_lo, corner_hi })
                .collect()
        }
        other => return Err(config_err(format!("shape must be disk or rectangle, got {other:?}"))),
    };
    let polys = cfg.polynomials("targets")?;
    if polys.len() != m {
        return Err(config_err(format!(
            "targets: expected {m} polynomials, got {}",
            polys.len()
        )));
    }
    let nb = cfg.count("boundary-samples")?;
    let ni = cfg.count("interior-samples")?;
    let mut comps = Vec::with_capacity(m);
    for (shape, coeffs) in shapes.into_iter().zip(polys) {
        let center = shape.center();
        comps.push((CompactSet::new(shape, nb, ni)?, TargetPolynomial::new(coeffs, center)?));
    }
    let tgt = JointTarget::new(comps, params)?;
    let sc = ScanConfig::new(
        cfg.real("tau-max")?,
        cfg.real("tau-step")?,
        cfg.real("epsilon")?,
        cfg.flag("refine")?,
    )?;
    Ok((tgt, sc))
}

fn run_scan(cfg: &ExperimentConfig, exec: Execution) -> Res<Output> {
    let (tgt, sc) = scan_setup(cfg)?;
    let (report, trace) = scan_with(&tgt, &sc, exec)?;
    render_scan(cfg, &report, &trace)
}

/// Render a finished scan exactly as the `scan` command does.
pub fn render_scan(cfg: &ExperimentConfig, report: &DensityReport, trace: &ScanTrace) -> Res<Output> {
    let format = cfg.format()?;
    let trace_on = cfg.flag("trace")?;
    let summary = format!(
        "density = {}, best_tau = {}, best_distance = {}, grid hits = {}/{}",
        report.density, report.best_tau, report.best_distance, report.grid_hits, report.grid_points
    );
    let body = match format {
        Format::Json => {
            let mut result = serde_json::to_value(report).expect("serialisable");
            if trace_on {
                let rows: Vec<Value> = trace
                    .distances
                    .iter()
                    .enumerate()
                    .map(|(i, d)| json!([trace.tau(i), d]))
                    .collect();
                result["trace"] = Value::Array(rows);
            }
            json_document(cfg, result)
        }
        Format::Csv => {
            let notes = [
                ("density", report.density.to_string()),
                ("hit_measure", report.hit_measure.to_string()),
                ("best_tau", report.best_tau.to_string()),
                ("best_distance", report.best_distance.to_string()),
                ("grid_points", report.grid_points.to_string()),
                ("grid_hits", report.grid_hits.to_string()),
                ("max_error_bound", report.max_error_bound.to_string()),
                ("max_derivative_bound", report.max_derivative_bound.to_string()),
            ];
            if trace_on {
                let csv = trace.to_csv();
                let rows = csv.split_once('\n').map(|(_, r)| r).unwrap_or("");
                csv_document(cfg, &notes, TRACE_CSV_HEADER, rows)
            } else {
                let rows: String = report
                    .hit_intervals
                    .iter()
                    .map(|(lo, hi)| format!("{},{}\n", fmt17(*lo), fmt17(*hi)))
                    .collect();
                csv_document(cfg, &notes, "lo,hi", &rows)
            }
        }
    };
    Ok(Output { body, summary })
}

fn run_probe(cfg: &ExperimentConfig, exec: Execution) -> Res<Output> {
    let format = cfg.format()?;
    let params = cfg.params("lambdas")?;
    let sigma = cfg.real("sigma")?;
    let n = cfg.count("n")?;
    let target = cfg.complexes("target")?;
    let epsilon = cfg.real("epsilon")?;
    let t_max = cfg.real("t-max")?;
    let t_step = cfg.real("t-step")?;
    let r = dense_image_probe(&params, sigma, n, &target, epsilon, t_max, t_step, exec)?;
    let summary = format!("t_best = {}, distance = {}", r.t_best, r.distance);
    let body = match format {
        Format::Json => json_document(cfg, serde_json::to_value(&r).expect("serialisable")),
        Format::Csv => csv_document(
            cfg,
            &[],
            "t_best,distance,grid_distance,grid_points,grid_hits,max_error_bound",
            &format!(
                "{},{},{},{},{},{}\n",
                fmt17(r.t_best),
                fmt17(r.distance),
                fmt17(r.grid_distance),
                r.grid_points,
                r.grid_hits,
                fmt17(r.max_error_bound)
            ),
        ),
    };
    Ok(Output { body, summary })
}

fn run_random(cfg: &ExperimentConfig, exec: Execution) -> Res<Output> {
    let format = cfg.format()?;
    let p = LerchParameters::new(cfg.real("alpha")?, cfg.real("lambda")?)?;
    let s = StripPoint::new(cfg.real("sigma")?, cfg.real("t")?);
    let rc = RandomSeriesConfig::new(cfg.count("n")?, p)?;
    let seed = cfg.seed("seed")?;
    let samples = cfg.count("samples")?;
    if samples == 0 {
        return Err(config_err("samples must be >= 1"));
    }
    let tail = tail_estimate(&rc, s)?;
    let seeds: Vec<u64> = (0..samples as u64).map(|i| seed.wrapping_add(i)).collect();
    let one = |sd: &u64| -> Res<Complex64> {
        let w = sample_phases(*sd, rc.truncation)?;
        Ok(eval_random_series(s, &rc, &w)?)
    };
    let values: Vec<Complex64> = match exec {
        Execution::Parallel => seeds.par_iter().map(one).collect::<Res<_>>()?,
        Execution::Serial => seeds.iter().map(one).collect::<Res<_>>()?,
    };
    let mean_square = values.iter().map(|v| v.norm_sqr()).sum::<f64>() / samples as f64;
    let moment = second_moment(&rc, s.sigma);
    let summary = format!("samples = {samples}, mean |L_N|^2 = {mean_square}, expected = {moment}");
    let body = match format {
        Format::Json => {
            let rows: Vec<Value> = seeds
                .iter()
                .zip(&values)
                .map(|(sd, v)| json!({"seed": sd, "value": complex_json(*v)}))
                .collect();
            json_document(
                cfg,
                json!({
                    "samples": rows,
                    "mean_square": mean_square,
                    "second_moment": moment,
                    "tail_estimate": tail,
                }),
            )
        }
        Format::Csv => {
            let rows: String = seeds
                .iter()
                .zip(&values)
                .map(|(sd, v)| format!("{sd},{},{}\n", fmt17(v.re), fmt17(v.im)))
                .collect();
            let notes = [
                ("mean_square", mean_square.to_string()),
                ("second_moment", moment.to_string()),
                ("tail_estimate", tail.to_string()),
            ];
            csv_document(cfg, &notes, "seed,re,im", &rows)
        }
    };
    Ok(Output { body, summary })
}

fn run_bergman(cfg: &ExperimentConfig) -> Res<Output> {
    let format = cfg.format()?;
    let params = cfg.params("lambdas")?;
    let d = cfg.reals("domain")?;
    if d.len() != 4 {
        return Err(config_err(format!(
            "domain: expected sigma1, sigma2, t1, t2, got {} values",
            d.len()
        )));
    }
    let u = BergmanDomain::new(
        Shape::Rectangle {
            corner_lo: Complex64::new(d[0], d[2]),
            corner_hi: Complex64::new(d[1], d[3]),
        },
        cfg.count("quadrature")?,
    )?;
    let center = u.shape().center();
    let g = TupleElement::new(
        cfg.polynomials("g")?
            .into_iter()
            .map(|c| BergmanElement::new(c, center))
            .collect::<Result<_, _>>()?,
    )?;
    let exponent = match cfg.raw("window-exponent") {
        Some(_) => cfg.count("window-exponent")? as u32,
        None => g.len() as u32,
    };
    let x = cfg.reals("x")?;
    let report: DiagnosticReport =
        divergence_diagnostic_with(&g, &params, &u, &x, exponent, cfg.real("window-scale")?)?;
    let total_terms: u64 = report.rows.iter().map(|r| r.terms).sum();
    let summary = format!("{} rows, {total_terms} window terms", report.rows.len());
    let body = match format {
        Format::Json => json_document(cfg, serde_json::to_value(&report).expect("serialisable")),
        Format::Csv => {
            let csv = report.to_csv();
            let (header, rows) = csv.split_once('\n').unwrap_or((DiagnosticReport::CSV_HEADER, ""));
            csv_document(cfg, &[], header, rows)
        }
    };
    Ok(Output { body, summary })
}

fn run_phi(cfg: &ExperimentConfig) -> Res<Output> {
    let format = cfg.format()?;
    let theta = cfg.real("theta")?;
    let t = cfg.real("t")?;
    let v = phi_pair_sum(theta, t)?;
    let summary = format!("phi = {} {:+}i", v.re, v.im);
    let body = match format {
        Format::Json => json_document(cfg, json!({ "value": complex_json(v) })),
        Format::Csv => csv_document(
            cfg,
            &[],
            "theta,t,re,im",
            &format!("{},{},{},{}\n", fmt17(theta), fmt17(t), fmt17(v.re), fmt17(v.im)),
        ),
    };
    Ok(Output { body, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(command: &str, entries: &[(&str, &str)]) -> Res<ExperimentConfig> {
        let src: Vec<(String, String)> = entries.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        ExperimentConfig::from_sources(command, &[src])
    }

    #[test]
    fn numbers_parse_in_the_documented_forms() {
        assert_eq!(parse_real("1/pi").unwrap(), 1.0 / PI);
        assert_eq!(parse_real("2/3").unwrap(), 2.0 / 3.0);
        assert_eq!(parse_real(" 1e-3 ").unwrap(), 1e-3);
        assert!(parse_real("abc").is_err());
        let z = |re, im| Complex64::new(re, im);
        assert_eq!(parse_complex("0.75+0.1i").unwrap(), z(0.75, 0.1));
        assert_eq!(parse_complex("0.75 - 0.1i").unwrap(), z(0.75, -0.1));
        assert_eq!(parse_complex("1.1").unwrap(), z(1.1, 0.0));
        assert_eq!(parse_complex("-2i").unwrap(), z(0.0, -2.0));
        assert_eq!(parse_complex("i").unwrap(), z(0.0, 1.0));
        assert_eq!(parse_complex("1e-3-1e-2i").unwrap(), z(1e-3, -1e-2));
        assert!(parse_complex("1+xi").is_err());
    }

    #[test]
    fn config_text_has_comments_and_overrides() {
        let text = "# a comment\nsigma = 0.75   # trailing\n\nt = 3\nt = 4\n";
        let entries = parse_config_text(text).unwrap();
        assert_eq!(entries.len(), 3);
        let c = ExperimentConfig::from_sources("eval", &[entries, vec![("t".into(), "5".into())]]).unwrap();
        assert_eq!(c.raw("t"), Some("5"));
        assert!(c.was_given("sigma"));
        assert!(!c.was_given("alpha"));
        assert_eq!(c.raw("alpha"), Some("1/pi"));
        assert!(parse_config_text("sigma 0.75\n").is_err());
    }

    #[test]
    fn unknown_and_missing_keys_are_config_errors() {
        assert!(matches!(
            cfg("eval", &[("sigma", "0.7"), ("bogus", "1")]),
            Err(ExperimentError::Config(_))
        ));
        assert!(matches!(cfg("eval", &[]), Err(ExperimentError::Config(_))));
        assert!(matches!(cfg("nope", &[]), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn outputs_round_trip_as_configs() {
        for format in ["json", "csv"] {
            let c = cfg("phi", &[("theta", "0.3"), ("t", "17"), ("format", format)]).unwrap();
            let out = run(&c, Execution::Serial).unwrap();
            let again = ExperimentConfig::from_sources("phi", &[parse_config_text(&out.body).unwrap()]).unwrap();
            assert_eq!(again.entries(), c.entries());
            assert_eq!(run(&again, Execution::Serial).unwrap(), out);
        }
    }

    #[test]
    fn phi_full_period_is_zero() {
        let c = cfg("phi", &[("theta", "0.25"), ("t", "3")]).unwrap();
        let out = run(&c, Execution::Serial).unwrap();
        let doc: Value = serde_json::from_str(&out.body).unwrap();
        let v = doc["result"]["value"].as_array().unwrap();
        assert!(v[0].as_f64().unwrap().abs() < 1e-15 && v[1].as_f64().unwrap().abs() < 1e-15);
    }

    #[test]
    fn duplicate_lambdas_are_config_errors() {
        let c = cfg(
            "scan",
            &[
                ("lambdas", "0.5, 1/2"),
                ("centers", "0.75, 0.75"),
                ("targets", "1; 1"),
                ("tau-max", "1"),
                ("epsilon", "0.5"),
            ],
        )
        .unwrap();
        let e = run(&c, Execution::Serial).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("0.5"), "{e}");
    }

    #[test]
    fn empty_window_is_a_computation_error() {
        let c = cfg("bergman", &[("lambdas", "1/3, 2/3"), ("g", "1; 1"), ("x", "5")]).unwrap();
        assert_eq!(run(&c, Execution::Serial).unwrap_err().exit_code(), 1);
        let c = cfg(
            "bergman",
            &[
                ("lambdas", "1/3, 2/3"),
                ("g", "1; 1"),
                ("x", "5"),
                ("window-exponent", "1"),
            ],
        )
        .unwrap();
        assert!(run(&c, Execution::Serial).is_ok());
    }
}
