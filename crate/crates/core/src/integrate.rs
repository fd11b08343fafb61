//! Pettis integration of `A`-valued functions and top-degree forms over boxes.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::AElem;
use crate::amodule::AMatrix;
use crate::exprdsl::{EvalContext, EvalError, Expr};
use crate::fields::{d, AFormField, FieldError};
use crate::geometry::{codifferential, hodge_form, GeometryError, MetricField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("box needs at least one interval")]
    Empty,
    #[error("interval {axis} is [{a}, {b}]; need a < b")]
    BadInterval { axis: usize, a: f64, b: f64 },
}

/// A product of closed intervals in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct BoxDomain {
    intervals: Vec<(f64, f64)>,
}

impl TryFrom<Vec<[f64; 2]>> for BoxDomain {
    type Error = DomainError;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self, DomainError> {
        BoxDomain::new(v.into_iter().map(|[a, b]| (a, b)).collect())
    }
}

impl From<BoxDomain> for Vec<[f64; 2]> {
    fn from(b: BoxDomain) -> Self {
        b.intervals.into_iter().map(|(a, b)| [a, b]).collect()
    }
}

impl BoxDomain {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self, DomainError> {
        if intervals.is_empty() {
            return Err(DomainError::Empty);
        }
        for (axis, &(a, b)) in intervals.iter().enumerate() {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(DomainError::BadInterval { axis, a, b });
            }
        }
        Ok(Self { intervals })
    }

    pub fn unit(n: usize) -> Self {
        Self { intervals: vec![(0.0, 1.0); n] }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn center(&self) -> Vec<f64> {
        self.intervals.iter().map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn volume(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(&self.intervals).all(|(x, (a, b))| a <= x && x <= b)
    }

    /// The `3^n` grid of lower end, midpoint and upper end on every axis.
    pub fn grid3(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for &(a, b) in &self.intervals {
            let ticks = [a, 0.5 * (a + b), b];
            out = out.into_iter().flat_map(|p| ticks.iter().map(move |&t| [p.as_slice(), &[t]].concat())).collect();
        }
        out
    }

    /// Maps `t ∈ [0,1]^n` affinely onto the box.
    pub fn from_unit(&self, t: &[f64]) -> Vec<f64> {
        t.iter().zip(&self.intervals).map(|(t, (a, b))| a + t * (b - a)).collect()
    }

    /// Same map, shrunk by `margin` (relative) away from every face.
    pub fn interior_point(&self, t: &[f64], margin: f64) -> Vec<f64> {
        let s: Vec<f64> = t.iter().map(|t| margin + (1.0 - 2.0 * margin) * t).collect();
        self.from_unit(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("expected a form of degree {expected}, got {got}")]
    WrongDegree { expected: usize, got: usize },
    #[error("{what} does not vanish on the boundary: |value| = {value:e} at {point:?}")]
    SupportViolation { what: String, point: Vec<f64>, value: f64 },
    #[error("quadrature needs m >= 2 and s >= 1, got m = {m}, s = {s}")]
    BadQuadrature { m: usize, s: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
}

/// A continuous linear functional on `A`, `Λ(a) = Σ_x w_x a(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    pub weights: Vec<Complex64>,
}

impl Functional {
    pub fn new(weights: Vec<Complex64>) -> Self {
        Self { weights }
    }

    pub fn apply(&self, a: &AElem) -> Complex64 {
        self.weights.iter().zip(a.values()).map(|(w, v)| w * v).sum()
    }
}

/// Composite Gauss–Legendre rule: `m` nodes on each of `s` equal pieces per axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quadrature {
    order: usize,
    subdivisions: usize,
    #[serde(skip)]
    nodes: Vec<f64>,
    #[serde(skip)]
    weights: Vec<f64>,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::new(8, 4).expect("valid default rule")
    }
}

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`.
fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // P_m(x) and P_m'(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

impl Quadrature {
    pub fn new(order: usize, subdivisions: usize) -> Result<Self, IntegrateError> {
        if order < 2 || subdivisions < 1 {
            return Err(IntegrateError::BadQuadrature { m: order, s: subdivisions });
        }
        let (nodes, weights) = gauss_legendre(order);
        Ok(Self { order, subdivisions, nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn subdivisions(&self) -> usize {
        self.subdivisions
    }

    /// Composite nodes and weights on `[a, b]`.
    pub fn rule_1d(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let h = (b - a) / self.subdivisions as f64;
        let mut out = Vec::with_capacity(self.order * self.subdivisions);
        for piece in 0..self.subdivisions {
            let lo = a + piece as f64 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
            }
        }
        out
    }

    /// Tensor-product rule over a list of intervals. With no intervals it is
    /// the single empty point of weight 1.
    fn grid(&self, intervals: &[(f64, f64)]) -> Vec<(Vec<f64>, f64)> {
        let mut out = vec![(Vec::new(), 1.0)];
        for &(a, b) in intervals {
            let rule = self.rule_1d(a, b);
            out = out
                .into_iter()
                .flat_map(|(p, w)| rule.iter().map(move |&(x, v)| ([p.as_slice(), &[x]].concat(), w * v)))
                .collect();
        }
        out
    }

    /// `Σ w_q f(x_q)` in a fixed node order.
    pub fn integrate<E>(
        &self,
        intervals: &[(f64, f64)],
        fibers: usize,
        mut f: impl FnMut(&[f64]) -> Result<AElem, E>,
    ) -> Result<AElem, E> {
        let mut acc = AElem::zero(fibers);
        for (p, w) in self.grid(intervals) {
            acc += &f(&p)?.scale_real(w);
        }
        Ok(acc)
    }

    /// Scalar version of [`Quadrature::integrate`].
    pub fn integrate_scalar<E>(
        &self,
        intervals: &[(f64, f64)],
        mut f: impl FnMut(&[f64]) -> Result<Complex64, E>,
    ) -> Result<Complex64, E> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, w) in self.grid(intervals) {
            acc += f(&p)? * w;
        }
        Ok(acc)
    }
}

/// Evaluation data shared by the integrals: constants and fiber count.
#[derive(Debug, Clone, Copy)]
pub struct Scalars<'a> {
    pub constants: &'a BTreeMap<String, AElem>,
    pub fibers: usize,
}

impl<'a> Scalars<'a> {
    pub fn of(g: &'a MetricField) -> Self {
        Self { constants: g.constants(), fibers: g.fibers() }
    }

    fn eval(&self, e: &Expr, p: &[f64]) -> Result<AElem, EvalError> {
        e.eval(&EvalContext::new(p, self.constants, self.fibers))
    }
}

fn check_dim(expected: usize, got: usize) -> Result<(), IntegrateError> {
    if expected != got {
        return Err(IntegrateError::DimMismatch { expected, got });
    }
    Ok(())
}

/// Fiberwise quadrature of `f` over the box, which is its Pettis integral.
pub fn pettis_integral(f: &Expr, dom: &BoxDomain, q: &Quadrature, s: Scalars<'_>) -> Result<AElem, IntegrateError> {
    Ok(q.integrate(dom.intervals(), s.fibers, |p| s.eval(f, p))?)
}

/// `|Λ(∫ f) − ∫ Λ∘f|`, with the right side integrated as a scalar function.
pub fn functional_commutation_residual(
    f: &Expr,
    lambda: &Functional,
    dom: &BoxDomain,
    q: &Quadrature,
    s: Scalars<'_>,
) -> Result<f64, IntegrateError> {
    let outer = lambda.apply(&pettis_integral(f, dom, q, s)?);
    let inner = q.integrate_scalar(dom.intervals(), |p| Ok::<_, IntegrateError>(lambda.apply(&s.eval(f, p)?)))?;
    Ok((outer - inner).norm())
}

/// `|Λ((G*f)(x)) − (G*(Λf))(x)|` at each point: the left side evaluates the
/// substituted expression, the right side evaluates `f` fiber by fiber at the
/// coordinates `G(x)` of that fiber.
pub fn pullback_commutation_residual(
    f: &Expr,
    map: &[Expr],
    lambda: &Functional,
    points: &[Vec<f64>],
    s: Scalars<'_>,
) -> Result<f64, IntegrateError> {
    let pulled = f.substitute(map);
    let mut worst: f64 = 0.0;
    for p in points {
        let left = lambda.apply(&s.eval(&pulled, p)?);
        let image = map.iter().map(|g| s.eval(g, p)).collect::<Result<Vec<_>, _>>()?;
        let mut right = Complex64::new(0.0, 0.0);
        for (fib, w) in lambda.weights.iter().enumerate() {
            let coords: Vec<f64> = image.iter().map(|c| c.get(fib).re).collect();
            right += w * s.eval(f, &coords)?.get(fib);
        }
        worst = worst.max((left - right).norm());
    }
    Ok(worst)
}

/// `∫ ω` for a top-degree form, oriented by the coordinate order.
pub fn integrate_form(w: &AFormField, dom: &BoxDomain, q: &Quadrature, s: Scalars<'_>) -> Result<AElem, IntegrateError> {
    check_dim(dom.dim(), w.dim())?;
    if w.degree() != w.dim() {
        return Err(IntegrateError::WrongDegree { expected: w.dim(), got: w.degree() });
    }
    let top: Vec<usize> = (0..w.dim()).collect();
    pettis_integral(&w.component(&top), dom, q, s)
}

/// Both sides of a change of variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeOfVariables {
    /// `∫_D (f∘G) |det DG|`.
    pub pulled_back: AElem,
    /// `∫_{G(D)} f` when the image box is given, otherwise the pulled-back
    /// integral under a finer rule.
    pub reference: AElem,
    pub residual: AElem,
}

/// `∫_D (f∘G)|det DG|` against `∫_{G(D)} f` (when `image` is the box `G(D)`)
/// or against a finer quadrature of the same pulled-back integrand.
pub fn change_of_variables_check(
    f: &Expr,
    map: &[Expr],
    dom: &BoxDomain,
    image: Option<&BoxDomain>,
    q: &Quadrature,
    s: Scalars<'_>,
) -> Result<ChangeOfVariables, IntegrateError> {
    let n = dom.dim();
    check_dim(n, map.len())?;
    let pulled = f.substitute(map);
    let jac: Vec<Vec<Expr>> = map.iter().map(|g| (0..n).map(|j| g.diff(j)).collect()).collect();
    let integrand = |p: &[f64]| -> Result<AElem, IntegrateError> {
        let entries = jac.iter().flatten().map(|e| s.eval(e, p)).collect::<Result<Vec<_>, _>>()?;
        let m = AMatrix::from_entries(n, n, entries);
        let det = m.det().map_err(GeometryError::from)?;
        let abs = det.map(|z| Complex64::new(z.re.abs(), 0.0));
        Ok(&s.eval(&pulled, p)? * &abs)
    };
    let pulled_back = q.integrate(dom.intervals(), s.fibers, integrand)?;
    let reference = match image {
        Some(b) => {
            check_dim(n, b.dim())?;
            pettis_integral(f, b, q, s)?
        }
        None => {
            let fine = Quadrature::new(q.order() + 4, 2 * q.subdivisions())?;
            fine.integrate(dom.intervals(), s.fibers, integrand)?
        }
    };
    let residual = &pulled_back - &reference;
    Ok(ChangeOfVariables { pulled_back, reference, residual })
}

/// Both sides of Stokes' theorem on a box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StokesCheck {
    pub interior: AElem,
    pub boundary: AElem,
    pub residual: AElem,
}

/// `∫ dω` against the boundary integral of `ω`. Each face carries the induced
/// orientation (outward normal first): the coefficient of
/// `dx^0∧…∧\hat{dx^i}∧…∧dx^{n−1}` enters with sign `(−1)^i` on the face `x_i = b_i`
/// and `−(−1)^i` on `x_i = a_i`.
pub fn stokes_residual(w: &AFormField, dom: &BoxDomain, q: &Quadrature, s: Scalars<'_>) -> Result<StokesCheck, IntegrateError> {
    let n = dom.dim();
    check_dim(n, w.dim())?;
    if w.degree() + 1 != n {
        return Err(IntegrateError::WrongDegree { expected: n - 1, got: w.degree() });
    }
    let interior = integrate_form(&d(w), dom, q, s)?;
    let mut boundary = AElem::zero(s.fibers);
    for i in 0..n {
        let key: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let coeff = w.component(&key);
        if coeff.is_zero() {
            continue;
        }
        let rest: Vec<(f64, f64)> = key.iter().map(|&j| dom.intervals()[j]).collect();
        let (a, b) = dom.intervals()[i];
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        for (x, face_sign) in [(b, sign), (a, -sign)] {
            let face = q.integrate(&rest, s.fibers, |r| {
                let mut full = r.to_vec();
                full.insert(i, x);
                s.eval(&coeff, &full)
            })?;
            boundary += &face.scale_real(face_sign);
        }
    }
    let residual = &interior - &boundary;
    Ok(StokesCheck { interior, boundary, residual })
}

/// `(α, β) = ∫ α∧⋆β`.
pub fn form_pairing(
    g: &MetricField,
    a: &AFormField,
    b: &AFormField,
    dom: &BoxDomain,
    q: &Quadrature,
) -> Result<AElem, IntegrateError> {
    if a.degree() != b.degree() {
        return Err(IntegrateError::WrongDegree { expected: a.degree(), got: b.degree() });
    }
    let top = a.wedge(&hodge_form(g, b)?)?;
    integrate_form(&top, dom, q, Scalars::of(g))
}

/// Points on every face of the box, `k` per axis including the corners.
fn boundary_samples(dom: &BoxDomain, k: usize) -> Vec<Vec<f64>> {
    let n = dom.dim();
    let mut out = Vec::new();
    for i in 0..n {
        let rest: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let mut pts = vec![Vec::new()];
        for &j in &rest {
            let (a, b) = dom.intervals()[j];
            let ticks: Vec<f64> = (0..k).map(|t| a + (b - a) * t as f64 / (k - 1) as f64).collect();
            pts = pts.into_iter().flat_map(|p: Vec<f64>| ticks.iter().map(move |&t| [p.as_slice(), &[t]].concat())).collect();
        }
        let (a, b) = dom.intervals()[i];
        for x in [a, b] {
            for p in &pts {
                let mut full = p.clone();
                full.insert(i, x);
                out.push(full);
            }
        }
    }
    out
}

/// Tolerance for boundary values of forms in the adjointness check.
pub const EPS_SUPPORT: f64 = 1e-8;

fn check_support(name: &str, w: &AFormField, dom: &BoxDomain, s: Scalars<'_>) -> Result<(), IntegrateError> {
    for p in boundary_samples(dom, 5) {
        for (key, e) in w.comps() {
            let v = s.eval(e, &p)?.norm();
            if v > EPS_SUPPORT {
                return Err(IntegrateError::SupportViolation { what: format!("{name}{key:?}"), point: p, value: v });
            }
        }
    }
    Ok(())
}

/// Both sides of `(dβ, α) = (β, δα)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Adjointness {
    pub d_side: AElem,
    pub delta_side: AElem,
    pub residual: AElem,
}

/// `(dβ, α) − (β, δα)` for `β` of degree `k − 1` and `α` of degree `k`, both
/// vanishing on the boundary of the box.
pub fn adjointness_residual(
    g: &MetricField,
    beta: &AFormField,
    alpha: &AFormField,
    dom: &BoxDomain,
    q: &Quadrature,
) -> Result<Adjointness, IntegrateError> {
    if beta.degree() + 1 != alpha.degree() {
        return Err(IntegrateError::WrongDegree { expected: alpha.degree().saturating_sub(1), got: beta.degree() });
    }
    let s = Scalars::of(g);
    check_support("beta", beta, dom, s)?;
    check_support("alpha", alpha, dom, s)?;
    let d_side = form_pairing(g, &d(beta), alpha, dom, q)?;
    let delta_side = form_pairing(g, beta, &codifferential(g, alpha)?, dom, q)?;
    let residual = &d_side - &delta_side;
    Ok(Adjointness { d_side, delta_side, residual })
}
