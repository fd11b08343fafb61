//! Metric geometry on a single chart.
//!
//! Metric entries are expressions; their partial derivatives up to third order
//! are taken symbolically once and cached. Everything else (inverse metric,
//! Christoffel symbols, curvature) is computed numerically at each point.

mod connection;
mod curvature;
mod operators;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use thiserror::Error;

pub use connection::*;
pub use curvature::*;
pub use operators::*;

use crate::algebra::{AElem, AlgebraError, EPS_SA};
use crate::amodule::{signature_of_det, AMatrix, LinalgError};
use crate::exprdsl::{EvalContext, EvalError, Expr};
use crate::fields::{multi_indices, FieldError};
use crate::integrate::BoxDomain;

/// Reserved constant name under which a metric stores its signature `ν`.
/// It cannot collide with user names, which must start with a letter.
pub const NU: &str = "$nu";

/// Symmetry tolerance for metric entries at validation points.
pub const EPS_SYM: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("metric is degenerate at {point:?} (fiber {fiber})")]
    PointDegenerate { point: Vec<f64>, fiber: usize },
    #[error("point {point:?} lies outside the domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("metric entries ({i},{j}) and ({j},{i}) differ at {point:?} (fiber {fiber})")]
    NotSymmetric { i: usize, j: usize, point: Vec<f64>, fiber: usize },
    #[error("metric entry ({i},{j}) is not self-adjoint at {point:?} (fiber {fiber})")]
    NotSelfAdjoint { i: usize, j: usize, point: Vec<f64>, fiber: usize },
    #[error("plane is degenerate: Q is not invertible at fiber {fiber}")]
    DegeneratePlane { fiber: usize },
    #[error("signature changes at {point:?} (fiber {fiber})")]
    SignatureInconsistent { point: Vec<f64>, fiber: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn singular(point: &[f64], e: LinalgError) -> GeometryError {
    match e {
        LinalgError::SingularMatrix { fiber } | LinalgError::Algebra(AlgebraError::NotInvertible { fiber, .. }) => {
            GeometryError::PointDegenerate { point: point.to_vec(), fiber }
        }
        other => other.into(),
    }
}

/// Dense array of `A` values indexed by `rank` indices in `0..n`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    n: usize,
    rank: usize,
    data: Vec<AElem>,
}

impl Components {
    pub fn zeros(n: usize, rank: usize, fibers: usize) -> Self {
        Self { n, rank, data: vec![AElem::zero(fibers); n.pow(rank as u32)] }
    }

    pub fn from_fn(n: usize, rank: usize, mut f: impl FnMut(&[usize]) -> AElem) -> Self {
        let data = multi_indices(n, rank).iter().map(|i| f(i)).collect();
        Self { n, rank, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> &AElem {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: AElem) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    pub fn values(&self) -> &[AElem] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(AElem::norm).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }

    /// `(index, value)` pairs in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, &AElem)> {
        multi_indices(self.n, self.rank).into_iter().zip(&self.data)
    }
}

struct Entry<'a>(&'a [usize], &'a AElem);

impl Serialize for Entry<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("index", self.0)?;
        m.serialize_entry("value", self.1)?;
        m.end()
    }
}

/// Serialized as a list of `{"index": [...], "value": AElem}` with every index spelled out.
impl Serialize for Components {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.data.len()))?;
        for (idx, v) in self.entries() {
            seq.serialize_element(&Entry(&idx, v))?;
        }
        seq.end()
    }
}

/// Metric `g_ij` on a box chart with lazily cached symbolic partials.
#[derive(Debug)]
pub struct MetricField {
    n: usize,
    entries: Vec<Expr>,
    constants: BTreeMap<String, AElem>,
    fibers: usize,
    domain: BoxDomain,
    nu: AElem,
    d1: OnceLock<Vec<Expr>>,
    d2: OnceLock<Vec<Expr>>,
    d3: OnceLock<Vec<Expr>>,
}

impl MetricField {
    /// Builds the metric and fixes `ν` from its value at the domain center.
    /// Use [`MetricField::validate`] to check symmetry, self-adjointness,
    /// nondegeneracy and signature constancy on sample points.
    pub fn new(
        entries: Vec<Vec<Expr>>,
        constants: BTreeMap<String, AElem>,
        fibers: usize,
        domain: BoxDomain,
    ) -> Result<Self, GeometryError> {
        let n = entries.len();
        if domain.dim() != n {
            return Err(GeometryError::DimMismatch { expected: n, got: domain.dim() });
        }
        for row in &entries {
            if row.len() != n {
                return Err(GeometryError::DimMismatch { expected: n, got: row.len() });
            }
        }
        let mut m = Self {
            n,
            entries: entries.into_iter().flatten().collect(),
            constants,
            fibers,
            domain,
            nu: AElem::one(fibers),
            d1: OnceLock::new(),
            d2: OnceLock::new(),
            d3: OnceLock::new(),
        };
        let center = m.domain.center();
        let det = m.gram_at(&center)?.det()?;
        m.nu = signature_of_det(&det).map_err(|e| singular(&center, e))?;
        m.constants.insert(NU.to_string(), m.nu.clone());
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn fibers(&self) -> usize {
        self.fibers
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    /// Signature `ν = |g|/g`, constant on the (connected) domain.
    pub fn nu(&self) -> &AElem {
        &self.nu
    }

    /// Constant table used for evaluation, including `ν` under [`NU`].
    pub fn constants(&self) -> &BTreeMap<String, AElem> {
        &self.constants
    }

    pub fn ctx<'a>(&'a self, p: &'a [f64]) -> EvalContext<'a> {
        EvalContext::new(p, &self.constants, self.fibers)
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.n + j]
    }

    fn d1(&self) -> &[Expr] {
        self.d1.get_or_init(|| {
            (0..self.n).flat_map(|a| self.entries.iter().map(move |e| e.diff(a))).collect()
        })
    }

    fn d2(&self) -> &[Expr] {
        self.d2.get_or_init(|| {
            let d1 = self.d1();
            (0..self.n).flat_map(|a| d1.iter().map(move |e| e.diff(a))).collect()
        })
    }

    fn d3(&self) -> &[Expr] {
        self.d3.get_or_init(|| {
            let d2 = self.d2();
            (0..self.n).flat_map(|a| d2.iter().map(move |e| e.diff(a))).collect()
        })
    }

    /// `∂_a g_ij`.
    pub fn partial(&self, a: usize, i: usize, j: usize) -> &Expr {
        &self.d1()[(a * self.n + i) * self.n + j]
    }

    /// `∂_a ∂_b g_ij`.
    pub fn partial2(&self, a: usize, b: usize, i: usize, j: usize) -> &Expr {
        &self.d2()[((a * self.n + b) * self.n + i) * self.n + j]
    }

    /// `∂_a ∂_b ∂_c g_ij`.
    pub fn partial3(&self, a: usize, b: usize, c: usize, i: usize, j: usize) -> &Expr {
        &self.d3()[(((a * self.n + b) * self.n + c) * self.n + i) * self.n + j]
    }

    fn check_point(&self, p: &[f64]) -> Result<(), GeometryError> {
        if p.len() != self.n {
            return Err(GeometryError::DimMismatch { expected: self.n, got: p.len() });
        }
        if !self.domain.contains(p) {
            return Err(GeometryError::OutOfDomain { point: p.to_vec() });
        }
        Ok(())
    }

    /// Metric values at `p` without any validation beyond evaluation.
    pub fn gram_at(&self, p: &[f64]) -> Result<AMatrix, GeometryError> {
        self.check_point(p)?;
        let ctx = self.ctx(p);
        let vals = self.entries.iter().map(|e| e.eval(&ctx)).collect::<Result<Vec<_>, _>>()?;
        Ok(AMatrix::from_entries(self.n, self.n, vals))
    }

    /// Checks symmetry, self-adjointness, invertibility and signature constancy
    /// at every point.
    pub fn validate(&self, points: &[Vec<f64>]) -> Result<(), GeometryError> {
        for p in points {
            let g = self.gram_at(p)?;
            for i in 0..self.n {
                for j in 0..self.n {
                    let (a, b) = (g.get(i, j), g.get(j, i));
                    for f in 0..self.fibers {
                        let (x, y) = (a.get(f), b.get(f));
                        if (x - y).norm() > EPS_SYM * x.norm().max(1.0) {
                            return Err(GeometryError::NotSymmetric { i, j, point: p.clone(), fiber: f });
                        }
                        if x.im.abs() > EPS_SA * x.re.abs().max(1.0) {
                            return Err(GeometryError::NotSelfAdjoint { i, j, point: p.clone(), fiber: f });
                        }
                    }
                }
            }
            let det = g.det()?;
            if let Err(e) = det.inv() {
                return Err(singular(p, e.into()));
            }
        }
        signature_field(self, points)?;
        Ok(())
    }

    /// Values and inverse of `g` at `p`, with partials up to `order` (≤ 3).
    pub fn jet(&self, p: &[f64], order: usize) -> Result<MetricJet, GeometryError> {
        let g = self.gram_at(p)?;
        let det = g.det()?;
        let ginv = g.inverse().map_err(|e| singular(p, e))?;
        let nu = signature_of_det(&det).map_err(|e| singular(p, e))?;
        let ctx = self.ctx(p);
        let n = self.n;
        let eval_all = |exprs: &[Expr], rank: usize| -> Result<Components, GeometryError> {
            let vals = exprs.iter().map(|e| e.eval(&ctx)).collect::<Result<Vec<_>, _>>()?;
            Ok(Components { n, rank, data: vals })
        };
        let dg = if order >= 1 { Some(eval_all(self.d1(), 3)?) } else { None };
        let ddg = if order >= 2 { Some(eval_all(self.d2(), 4)?) } else { None };
        let dddg = if order >= 3 { Some(eval_all(self.d3(), 5)?) } else { None };
        Ok(MetricJet { point: p.to_vec(), g, ginv, det, nu, dg, ddg, dddg })
    }
}

/// Pointwise values of the metric and its partials.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub point: Vec<f64>,
    pub g: AMatrix,
    pub ginv: AMatrix,
    pub det: AElem,
    pub nu: AElem,
    /// `∂_a g_ij` at index `[a, i, j]`.
    pub dg: Option<Components>,
    /// `∂_a ∂_b g_ij` at `[a, b, i, j]`.
    pub ddg: Option<Components>,
    /// `∂_a ∂_b ∂_c g_ij` at `[a, b, c, i, j]`.
    pub dddg: Option<Components>,
}

impl MetricJet {
    pub fn dim(&self) -> usize {
        self.g.rows()
    }

    pub fn fibers(&self) -> usize {
        self.det.fibers()
    }

    /// `sqrt|g| = sqrt(ν g)`.
    pub fn sqrt_abs_g(&self) -> AElem {
        (&self.nu * &self.det).sqrt_pos().expect("ν g is positive for an invertible self-adjoint determinant")
    }
}
