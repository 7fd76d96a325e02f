use thiserror::Error;

/// Errors raised by the evaluation, geometry and diagnostic routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point s = {sigma}+{t}i lies outside the admissible region: {reason}")]
    Domain { sigma: f64, t: f64, reason: String },

    #[error("s = {sigma}+{t}i is within {radius} of the pole at s = 1")]
    Pole { sigma: f64, t: f64, radius: f64 },

    #[error("remainder bound {achieved:e} did not reach target {target:e} within {max_terms} terms")]
    NonConvergence {
        target: f64,
        achieved: f64,
        max_terms: usize,
    },

    #[error("no valid Cauchy circle fits around s = {sigma}+{t}i")]
    Radius { sigma: f64, t: f64 },

    #[error("length mismatch: {left} values vs {right} points")]
    LengthMismatch { left: usize, right: usize },

    #[error("compact set leaves the strip 1/2 < Re s < 1: {0}")]
    OutsideStrip(String),

    #[error("phase sequence has {available} entries but truncation needs {needed}")]
    Truncation { available: usize, needed: usize },

    #[error("window [{lo}, {hi}] contains no n + alpha with integer n >= 0")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("window upper end {hi:e} exceeds the desk-scale cap 1e8")]
    WindowTooLarge { hi: f64 },

    #[error("lambda values {0} and {1} coincide")]
    DuplicateLambda(f64, f64),

    #[error("decomposition check failed: |sum|^2 = {direct:e}, S1 + S2 = {split:e}")]
    Decomposition { direct: f64, split: f64 },
}

pub type Result<T> = std::result::Result<T, LabError>;
