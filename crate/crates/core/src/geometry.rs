//! Compact subsets of the strip `D = {1/2 < Re s < 1}`, target polynomials
//! and sampled sup-norm distances.
//!
//! Shapes are closed disks and axis-aligned rectangles, both of which have
//! connected complements. The sampled sup-norm is a lower bound on the true
//! sup; [`SupNormEstimate::inflated`] adds a Lipschitz allowance.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const DEFAULT_BOUNDARY_SAMPLES: usize = 256;
pub const DEFAULT_INTERIOR_SAMPLES: usize = 64;

/// Highest admissible degree of a target polynomial.
pub const MAX_TARGET_DEGREE: usize = 32;

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Disk { center: Complex64, radius: f64 },
    Rectangle { corner_lo: Complex64, corner_hi: Complex64 },
}

impl Shape {
    pub fn center(&self) -> Complex64 {
        match *self {
            Shape::Disk { center, .. } => center,
            Shape::Rectangle { corner_lo, corner_hi } => (corner_lo + corner_hi) * 0.5,
        }
    }

    /// Largest distance from [`Shape::center`] to a point of the shape.
    pub fn radius(&self) -> f64 {
        match *self {
            Shape::Disk { radius, .. } => radius,
            Shape::Rectangle { corner_lo, corner_hi } => (corner_hi - corner_lo).norm() * 0.5,
        }
    }

    /// Horizontal extent `(min Re, max Re)`.
    pub fn real_extent(&self) -> (f64, f64) {
        match *self {
            Shape::Disk { center, radius } => (center.re - radius, center.re + radius),
            Shape::Rectangle { corner_lo, corner_hi } => (corner_lo.re, corner_hi.re),
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Disk { radius, .. } => PI * radius * radius,
            Shape::Rectangle { corner_lo, corner_hi } => (corner_hi.re - corner_lo.re) * (corner_hi.im - corner_lo.im),
        }
    }

    /// Check the shape is well formed and its closure lies in `D`.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Shape::Disk { center, radius } => {
                if !(radius > 0.0 && radius.is_finite() && center.im.is_finite()) {
                    return Err(LabError::InvalidParameter(format!(
                        "disk radius must be positive, got {radius}"
                    )));
                }
            }
            Shape::Rectangle { corner_lo, corner_hi } => {
                if !(corner_lo.re <= corner_hi.re && corner_lo.im <= corner_hi.im)
                    || !corner_lo.im.is_finite()
                    || !corner_hi.im.is_finite()
                {
                    return Err(LabError::InvalidParameter(format!(
                        "rectangle corners {corner_lo} / {corner_hi} are not ordered"
                    )));
                }
            }
        }
        let (lo, hi) = self.real_extent();
        if !(lo > 0.5 && hi < 1.0) {
            return Err(LabError::OutsideStrip(format!(
                "real extent [{lo}, {hi}] is not inside (1/2, 1)"
            )));
        }
        Ok(())
    }
}

/// A compact set `K ⊂ D` together with its sampling density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactSet {
    shape: Shape,
    boundary_samples: usize,
    interior_samples: usize,
}

impl CompactSet {
    pub fn new(shape: Shape, boundary_samples: usize, interior_samples: usize) -> Result<Self> {
        shape.validate()?;
        if boundary_samples + interior_samples == 0 {
            return Err(LabError::InvalidParameter(
                "a compact set needs at least one sample".into(),
            ));
        }
        Ok(CompactSet {
            shape,
            boundary_samples,
            interior_samples,
        })
    }

    pub fn disk(center: Complex64, radius: f64) -> Result<Self> {
        Self::new(
            Shape::Disk { center, radius },
            DEFAULT_BOUNDARY_SAMPLES,
            DEFAULT_INTERIOR_SAMPLES,
        )
    }

    pub fn rectangle(corner_lo: Complex64, corner_hi: Complex64) -> Result<Self> {
        Self::new(
            Shape::Rectangle { corner_lo, corner_hi },
            DEFAULT_BOUNDARY_SAMPLES,
            DEFAULT_INTERIOR_SAMPLES,
        )
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn boundary_samples(&self) -> usize {
        self.boundary_samples
    }

    pub fn interior_samples(&self) -> usize {
        self.interior_samples
    }

    /// Deterministic samples: boundary points first, then interior points.
    ///
    /// Disks: equally spaced boundary angles from 0, interior starting with
    /// the center followed by a sunflower spiral. Rectangles: equally spaced
    /// along the perimeter from `corner_lo` counter-clockwise, interior on a
    /// midpoint grid. A degenerate rectangle yields its single point.
    pub fn sample_points(&self) -> Vec<Complex64> {
        match self.shape {
            Shape::Disk { center, radius } => {
                let mut pts = Vec::with_capacity(self.boundary_samples + self.interior_samples);
                for k in 0..self.boundary_samples {
                    let theta = 2.0 * PI * k as f64 / self.boundary_samples as f64;
                    pts.push(center + Complex64::from_polar(radius, theta));
                }
                if self.interior_samples > 0 {
                    pts.push(center);
                }
                for k in 1..self.interior_samples {
                    let rho = radius * (k as f64 / self.interior_samples as f64).sqrt();
                    pts.push(center + Complex64::from_polar(rho, k as f64 * GOLDEN_ANGLE));
                }
                pts
            }
            Shape::Rectangle { corner_lo, corner_hi } => {
                let w = corner_hi.re - corner_lo.re;
                let h = corner_hi.im - corner_lo.im;
                if w == 0.0 && h == 0.0 {
                    return vec![corner_lo];
                }
                let mut pts = Vec::with_capacity(self.boundary_samples + self.interior_samples);
                let perimeter = 2.0 * (w + h);
                for k in 0..self.boundary_samples {
                    let d = perimeter * k as f64 / self.boundary_samples as f64;
                    pts.push(perimeter_point(corner_lo, w, h, d));
                }
                if self.interior_samples > 0 {
                    let nx = (self.interior_samples as f64).sqrt().ceil() as usize;
                    let ny = self.interior_samples.div_ceil(nx);
                    'grid: for j in 0..ny {
                        for i in 0..nx {
                            if pts.len() == self.boundary_samples + self.interior_samples {
                                break 'grid;
                            }
                            let x = corner_lo.re + w * (i as f64 + 0.5) / nx as f64;
                            let y = corner_lo.im + h * (j as f64 + 0.5) / ny as f64;
                            pts.push(Complex64::new(x, y));
                        }
                    }
                }
                pts
            }
        }
    }

    /// Largest gap between a boundary sample and its successor.
    pub fn boundary_mesh_width(&self) -> f64 {
        let n = self.boundary_samples.max(1) as f64;
        match self.shape {
            Shape::Disk { radius, .. } => 2.0 * radius * (PI / n).sin(),
            Shape::Rectangle { corner_lo, corner_hi } => {
                let w = corner_hi.re - corner_lo.re;
                let h = corner_hi.im - corner_lo.im;
                2.0 * (w + h) / n
            }
        }
    }
}

fn perimeter_point(lo: Complex64, w: f64, h: f64, d: f64) -> Complex64 {
    if d < w {
        lo + Complex64::new(d, 0.0)
    } else if d < w + h {
        lo + Complex64::new(w, d - w)
    } else if d < 2.0 * w + h {
        lo + Complex64::new(w - (d - w - h), h)
    } else {
        lo + Complex64::new(0.0, h - (d - 2.0 * w - h))
    }
}

/// A polynomial `∑ c_k (s - center)^k` of degree at most 32.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetPolynomial {
    coefficients: Vec<Complex64>,
    center: Complex64,
}

impl TargetPolynomial {
    pub fn new(coefficients: Vec<Complex64>, center: Complex64) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(LabError::InvalidParameter(
                "target polynomial needs at least one coefficient".into(),
            ));
        }
        if coefficients.len() > MAX_TARGET_DEGREE + 1 {
            return Err(LabError::InvalidParameter(format!(
                "target degree {} exceeds {MAX_TARGET_DEGREE}",
                coefficients.len() - 1
            )));
        }
        Ok(TargetPolynomial { coefficients, center })
    }

    pub fn constant(c: Complex64) -> Self {
        TargetPolynomial {
            coefficients: vec![c],
            center: Complex64::new(0.0, 0.0),
        }
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        let d = s - self.center;
        self.coefficients
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * d + c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNormEstimate {
    pub value: f64,
    pub argmax_point: Complex64,
    pub samples_used: usize,
}

impl SupNormEstimate {
    /// Upper allowance for the unsampled sup: `value + lipschitz · mesh / 2`,
    /// where `lipschitz` bounds `|F'|` on a neighbourhood of the sampled set.
    pub fn inflated(&self, lipschitz: f64, mesh_width: f64) -> f64 {
        self.value + 0.5 * lipschitz * mesh_width
    }
}

/// `max_i |values[i] - target(points[i])|`; ties keep the first maximiser.
pub fn sup_distance(values: &[Complex64], target: &TargetPolynomial, points: &[Complex64]) -> Result<SupNormEstimate> {
    if values.len() != points.len() {
        return Err(LabError::LengthMismatch {
            left: values.len(),
            right: points.len(),
        });
    }
    if values.is_empty() {
        return Err(LabError::InvalidParameter("no samples".into()));
    }
    let mut best = SupNormEstimate {
        value: -1.0,
        argmax_point: points[0],
        samples_used: values.len(),
    };
    for (v, p) in values.iter().zip(points) {
        let d = (*v - target.eval(*p)).norm();
        if d > best.value {
            best.value = d;
            best.argmax_point = *p;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn small_disk_samples() {
        let k = CompactSet::new(
            Shape::Disk {
                center: c(0.75, 0.0),
                radius: 0.05,
            },
            4,
            1,
        )
        .unwrap();
        let pts = k.sample_points();
        let expected = [c(0.80, 0.0), c(0.75, 0.05), c(0.70, 0.0), c(0.75, -0.05), c(0.75, 0.0)];
        assert_eq!(pts.len(), 5);
        for (p, e) in pts.iter().zip(expected) {
            assert!((p - e).norm() < 1e-15, "{p} vs {e}");
        }
    }

    #[test]
    fn degenerate_rectangle_is_a_point() {
        let k = CompactSet::rectangle(c(0.7, 2.0), c(0.7, 2.0)).unwrap();
        assert_eq!(k.sample_points(), vec![c(0.7, 2.0)]);
    }

    #[test]
    fn disk_leaving_the_strip_is_rejected() {
        assert!(matches!(
            CompactSet::disk(c(0.75, 0.0), 0.3),
            Err(LabError::OutsideStrip(_))
        ));
        assert!(CompactSet::disk(c(0.75, 0.0), 0.25).is_err());
        assert!(CompactSet::rectangle(c(0.5, 0.0), c(0.9, 1.0)).is_err());
        assert!(CompactSet::rectangle(c(0.8, 0.0), c(0.6, 1.0)).is_err());
    }

    #[test]
    fn rectangle_sample_count() {
        let k = CompactSet::new(
            Shape::Rectangle {
                corner_lo: c(0.6, 0.0),
                corner_hi: c(0.9, 1.0),
            },
            40,
            10,
        )
        .unwrap();
        let pts = k.sample_points();
        assert_eq!(pts.len(), 50);
        assert_eq!(pts[0], c(0.6, 0.0));
        for p in &pts[40..] {
            assert!(p.re > 0.6 && p.re < 0.9 && p.im > 0.0 && p.im < 1.0);
        }
    }

    #[test]
    fn sup_distance_examples() {
        let zero = TargetPolynomial::constant(c(0.0, 0.0));
        let est = sup_distance(&[c(3.0, 4.0)], &zero, &[c(0.7, 0.0)]).unwrap();
        assert_eq!(est.value, 5.0);

        let target = TargetPolynomial::new(vec![c(1.0, 0.5), c(0.0, 2.0), c(-1.0, 0.0)], c(0.75, 0.0)).unwrap();
        let pts = CompactSet::disk(c(0.75, 0.1), 0.05).unwrap().sample_points();
        let vals: Vec<_> = pts.iter().map(|p| target.eval(*p)).collect();
        assert_eq!(sup_distance(&vals, &target, &pts).unwrap().value, 0.0);

        assert!(matches!(
            sup_distance(&vals[1..], &target, &pts),
            Err(LabError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn target_degree_is_capped() {
        assert!(TargetPolynomial::new(vec![c(1.0, 0.0); 34], c(0.0, 0.0)).is_err());
        assert!(TargetPolynomial::new(vec![c(1.0, 0.0); 33], c(0.0, 0.0)).is_ok());
    }

    fn shape_strategy() -> impl Strategy<Value = Shape> {
        prop_oneof![
            (0.52f64..0.98, -50.0f64..50.0, 0.001f64..0.2).prop_filter_map("fits", |(x, y, r)| {
                let s = Shape::Disk {
                    center: c(x, y),
                    radius: r,
                };
                s.validate().ok().map(|_| s)
            }),
            (0.51f64..0.99, 0.51f64..0.99, -50.0f64..50.0, 0.0f64..3.0).prop_map(|(a, b, y, h)| {
                Shape::Rectangle {
                    corner_lo: c(a.min(b), y),
                    corner_hi: c(a.max(b), y + h),
                }
            }),
        ]
    }

    proptest! {
        #[test]
        fn samples_stay_strictly_inside_the_strip(
            shape in shape_strategy(), nb in 1usize..300, ni in 0usize..100
        ) {
            let k = CompactSet::new(shape, nb, ni).unwrap();
            for p in k.sample_points() {
                prop_assert!(p.re > 0.5 && p.re < 1.0);
            }
        }

        #[test]
        fn sup_distance_is_permutation_and_shift_invariant(
            raw in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0.55f64..0.95, -2.0f64..2.0), 1..60),
            shift in (-5.0f64..5.0, -5.0f64..5.0),
            rot in 0usize..60,
        ) {
            let target = TargetPolynomial::new(vec![c(0.3, -0.2), c(1.0, 1.0)], c(0.75, 0.0)).unwrap();
            let vals: Vec<_> = raw.iter().map(|r| c(r.0, r.1)).collect();
            let pts: Vec<_> = raw.iter().map(|r| c(r.2, r.3)).collect();
            let base = sup_distance(&vals, &target, &pts).unwrap().value;

            let k = rot % vals.len();
            let mut v2 = vals.clone();
            let mut p2 = pts.clone();
            v2.rotate_left(k);
            p2.rotate_left(k);
            prop_assert_eq!(sup_distance(&v2, &target, &p2).unwrap().value, base);

            let sh = c(shift.0, shift.1);
            let shifted_target = TargetPolynomial::new(vec![c(0.3, -0.2) + sh, c(1.0, 1.0)], c(0.75, 0.0)).unwrap();
            let v3: Vec<_> = vals.iter().map(|v| v + sh).collect();
            let moved = sup_distance(&v3, &shifted_target, &pts).unwrap().value;
            prop_assert!((moved - base).abs() <= 1e-12 * (1.0 + base + sh.norm()));
        }
    }
}
