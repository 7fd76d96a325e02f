//! Bergman-space computations on a domain `U` with closure in the strip:
//! area inner products, the transform `Δ(z) = ∬_U e^{-sz} conj(g(s)) dσ dt`,
//! the norms of `v_n(s) = e(λn)(n+α)^{-s}`, and the windowed sums of
//! `∑_j e(λ_j n) Δ_j(log(n+α))`.
//!
//! Elements of `B²(U)` are represented by polynomials, which are dense, so
//! every inner product below is an exact tensor Gauss rule up to degree.

mod windowed;

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::Shape;
use crate::lerch::LerchParameters;

pub use windowed::{
    divergence_diagnostic, divergence_diagnostic_with, phi_pair_sum, windowed_sums, DiagnosticReport, DiagnosticRow,
    WindowedSums, MAX_WINDOW_START,
};

pub const DEFAULT_QUADRATURE_ORDER: usize = 32;
pub const MIN_QUADRATURE_ORDER: usize = 8;
pub const MAX_ELEMENT_DEGREE: usize = 32;

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
fn gauss_legendre(q: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(q).expect("q >= 1"));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect()
}

#[derive(Debug, Clone)]
enum Rule {
    /// Product rule `∑_i ∑_j wσ_i wt_j f(σ_i + i t_j)`.
    Tensor { sigma: Vec<(f64, f64)>, t: Vec<(f64, f64)> },
    /// Radial Gauss rule (with the Jacobian `ρ`) times an angular trapezoid.
    Polar,
}

/// A disk or rectangle with closure in the strip, with its quadrature rule.
#[derive(Debug, Clone)]
pub struct BergmanDomain {
    shape: Shape,
    order: usize,
    rule: Rule,
    nodes: Vec<Complex64>,
    weights: Vec<f64>,
}

impl BergmanDomain {
    /// `order` is the Gauss order per axis (rectangle) or radial order
    /// (disk, which then uses `2 * order` angles).
    pub fn new(shape: Shape, order: usize) -> Result<Self> {
        shape.validate()?;
        if order < MIN_QUADRATURE_ORDER {
            return Err(LabError::InvalidParameter(format!(
                "quadrature order {order} is below {MIN_QUADRATURE_ORDER}"
            )));
        }
        if !(shape.area() > 0.0) {
            return Err(LabError::InvalidParameter(
                "a Bergman domain needs a nonempty interior".into(),
            ));
        }
        let (rule, nodes, weights) = match shape {
            Shape::Rectangle { corner_lo, corner_hi } => {
                let sigma = gauss_legendre(order, corner_lo.re, corner_hi.re);
                let t = gauss_legendre(order, corner_lo.im, corner_hi.im);
                let mut nodes = Vec::with_capacity(order * order);
                let mut weights = Vec::with_capacity(order * order);
                for &(x, wx) in &sigma {
                    for &(y, wy) in &t {
                        nodes.push(Complex64::new(x, y));
                        weights.push(wx * wy);
                    }
                }
                (Rule::Tensor { sigma, t }, nodes, weights)
            }
            Shape::Disk { center, radius } => {
                let radial = gauss_legendre(order, 0.0, radius);
                let angles = 2 * order;
                let dtheta = 2.0 * PI / angles as f64;
                let mut nodes = Vec::with_capacity(order * angles);
                let mut weights = Vec::with_capacity(order * angles);
                for &(rho, w) in &radial {
                    for k in 0..angles {
                        nodes.push(center + Complex64::from_polar(rho, k as f64 * dtheta));
                        weights.push(w * rho * dtheta);
                    }
                }
                (Rule::Polar, nodes, weights)
            }
        };
        Ok(BergmanDomain {
            shape,
            order,
            rule,
            nodes,
            weights,
        })
    }

    pub fn rectangle(corner_lo: Complex64, corner_hi: Complex64) -> Result<Self> {
        Self::new(Shape::Rectangle { corner_lo, corner_hi }, DEFAULT_QUADRATURE_ORDER)
    }

    pub fn disk(center: Complex64, radius: f64) -> Result<Self> {
        Self::new(Shape::Disk { center, radius }, DEFAULT_QUADRATURE_ORDER)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn area(&self) -> f64 {
        self.shape.area()
    }

    /// Left edge of `U`.
    pub fn sigma1(&self) -> f64 {
        self.shape.real_extent().0
    }

    /// Right edge of `U`.
    pub fn sigma2(&self) -> f64 {
        self.shape.real_extent().1
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// A polynomial `∑ c_k (s - center)^k` of degree at most 32.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BergmanElement {
    coefficients: Vec<Complex64>,
    center: Complex64,
}

impl BergmanElement {
    pub fn new(coefficients: Vec<Complex64>, center: Complex64) -> Result<Self> {
        if coefficients.len() > MAX_ELEMENT_DEGREE + 1 {
            return Err(LabError::InvalidParameter(format!(
                "element degree {} exceeds {MAX_ELEMENT_DEGREE}",
                coefficients.len() - 1
            )));
        }
        let coefficients = if coefficients.is_empty() {
            vec![Complex64::new(0.0, 0.0)]
        } else {
            coefficients
        };
        Ok(BergmanElement { coefficients, center })
    }

    pub fn constant(c: Complex64) -> Self {
        BergmanElement {
            coefficients: vec![c],
            center: Complex64::new(0.0, 0.0),
        }
    }

    pub fn zero() -> Self {
        Self::constant(Complex64::new(0.0, 0.0))
    }

    /// `(s - center)^k`.
    pub fn monomial(k: usize, center: Complex64) -> Result<Self> {
        let mut c = vec![Complex64::new(0.0, 0.0); k + 1];
        c[k] = Complex64::new(1.0, 0.0);
        Self::new(c, center)
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        let d = s - self.center;
        self.coefficients
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * d + c)
    }
}

/// `g = (g_1, …, g_m)` in the product space with the summed inner product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleElement {
    components: Vec<BergmanElement>,
}

impl TupleElement {
    pub fn new(components: Vec<BergmanElement>) -> Result<Self> {
        if components.is_empty() {
            return Err(LabError::InvalidParameter(
                "a tuple element needs at least one component".into(),
            ));
        }
        Ok(TupleElement { components })
    }

    pub fn components(&self) -> &[BergmanElement] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(BergmanElement::is_zero)
    }
}

/// `⟨f, g⟩ = ∬_U f(s) conj(g(s)) dσ dt`.
pub fn inner_product(f: &BergmanElement, g: &BergmanElement, u: &BergmanDomain) -> Complex64 {
    u.nodes
        .iter()
        .zip(&u.weights)
        .map(|(s, w)| f.eval(*s) * g.eval(*s).conj() * *w)
        .sum()
}

/// Sum of componentwise inner products.
pub fn tuple_inner_product(f: &TupleElement, g: &TupleElement, u: &BergmanDomain) -> Result<Complex64> {
    if f.len() != g.len() {
        return Err(LabError::LengthMismatch {
            left: f.len(),
            right: g.len(),
        });
    }
    Ok(f.components
        .iter()
        .zip(&g.components)
        .map(|(a, b)| inner_product(a, b, u))
        .sum())
}

/// `Δ(z) = ∬_U e^{-sz} conj(g(s)) dσ dt` for a fixed element, with the
/// weighted conjugate values cached.
#[derive(Debug, Clone)]
pub struct DeltaTransform {
    element: BergmanElement,
    domain: BergmanDomain,
    /// `w_k conj(g(s_k))`, laid out like `domain.nodes`.
    weighted: Vec<Complex64>,
}

impl DeltaTransform {
    pub fn new(element: BergmanElement, domain: &BergmanDomain) -> Self {
        let weighted = domain
            .nodes
            .iter()
            .zip(&domain.weights)
            .map(|(s, w)| element.eval(*s).conj() * *w)
            .collect();
        DeltaTransform {
            element,
            domain: domain.clone(),
            weighted,
        }
    }

    pub fn element(&self) -> &BergmanElement {
        &self.element
    }

    pub fn domain(&self) -> &BergmanDomain {
        &self.domain
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match &self.domain.rule {
            Rule::Tensor { sigma, t } => {
                // e^{-sz} = e^{-σz} e^{-itz} separates over the product grid.
                let q = t.len();
                let row: Vec<Complex64> = t.iter().map(|&(y, _)| (-Complex64::i() * y * z).exp()).collect();
                let mut total = Complex64::new(0.0, 0.0);
                for (i, &(x, _)) in sigma.iter().enumerate() {
                    let w = &self.weighted[i * q..(i + 1) * q];
                    let inner: Complex64 = w.iter().zip(&row).map(|(a, b)| a * b).sum();
                    total += (-x * z).exp() * inner;
                }
                total
            }
            Rule::Polar => self
                .domain
                .nodes
                .iter()
                .zip(&self.weighted)
                .map(|(s, w)| (-s * z).exp() * w)
                .sum(),
        }
    }
}

pub fn delta_transform(d: &DeltaTransform, z: Complex64) -> Complex64 {
    d.eval(z)
}

/// `⟨v_n, v_n⟩ = ∬_U (n+α)^{-2σ} dσ dt`; independent of `λ`.
pub fn vn_norm_sq(n: u64, p: &LerchParameters, u: &BergmanDomain) -> f64 {
    let l = (n as f64 + p.alpha()).ln();
    match &u.rule {
        Rule::Tensor { sigma, t } => {
            let height: f64 = t.iter().map(|&(_, w)| w).sum();
            let width: f64 = sigma.iter().map(|&(x, w)| w * (-2.0 * x * l).exp()).sum();
            width * height
        }
        Rule::Polar => u
            .nodes
            .iter()
            .zip(&u.weights)
            .map(|(s, w)| w * (-2.0 * s.re * l).exp())
            .sum(),
    }
}
