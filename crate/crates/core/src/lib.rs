//! Numerical laboratory for Lerch zeta-functions.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bergman;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod lerch;
pub mod random;
pub mod search;

pub use bergman::{
    delta_transform, divergence_diagnostic, divergence_diagnostic_with, inner_product, phi_pair_sum, vn_norm_sq,
    windowed_sums, BergmanDomain, BergmanElement, DeltaTransform, TupleElement,
};
pub use error::{LabError, Result};
pub use geometry::{sup_distance, CompactSet, Shape, SupNormEstimate, TargetPolynomial};
pub use lerch::{
    eval_continued, eval_continued_floor, eval_derivative, eval_derivative_floor, eval_series, EvaluationResult,
    LerchParameters, StripPoint,
};
pub use random::{eval_random_series, sample_phases, tail_estimate, PhaseSequence, RandomSeriesConfig};
pub use search::{
    dense_image_probe, derivative_vector, joint_distance, scan, scan_with, DensityReport, Execution, JointTarget,
    ProbeReport, ScanConfig, ScanTrace,
};

/// Scientific notation with 17 significant digits; parses back to the same double.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
