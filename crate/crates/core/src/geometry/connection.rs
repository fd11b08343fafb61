use std::collections::BTreeMap;

use super::{Components, GeometryError, MetricField, MetricJet};
use crate::algebra::AElem;
use crate::amodule::AMatrix;
use crate::exprdsl::{EvalContext, Expr};
use crate::fields::{lie_bracket, AVectorField};

/// Connection coefficients `Γ^k_ij` at a point, stored at index `[k, i, j]`,
/// so that `∇_{∂_i} ∂_j = Γ^k_ij ∂_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoeffs(pub Components);

impl ConnectionCoeffs {
    pub fn dim(&self) -> usize {
        self.0.n()
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> &AElem {
        self.0.get(&[k, i, j])
    }

    /// `max |Γ^k_ij − Γ^k_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max(self.get(k, i, j).max_abs_diff(self.get(k, j, i)));
                }
            }
        }
        worst
    }
}

/// Connection coefficients and their partials `∂_a Γ^k_ij` (index `[a, k, i, j]`)
/// and `∂_a ∂_b Γ^k_ij` (index `[a, b, k, i, j]`) at one point.
#[derive(Debug, Clone)]
pub struct ConnectionJet {
    pub gamma: ConnectionCoeffs,
    pub d1: Option<Components>,
    pub d2: Option<Components>,
}

/// An `A`-connection on the chart.
pub trait AConnection: Send + Sync {
    fn dim(&self) -> usize;

    fn fibers(&self) -> usize;

    fn context<'a>(&'a self, p: &'a [f64]) -> EvalContext<'a>;

    /// Coefficients at `p` with partials up to `order` (≤ 2).
    fn jet(&self, p: &[f64], order: usize) -> Result<ConnectionJet, GeometryError>;

    /// `(∇_X Y)^k = X^i ∂_i Y^k + X^i Y^j Γ^k_ij` at `p`.
    fn covariant_derivative(&self, x: &AVectorField, y: &AVectorField, p: &[f64]) -> Result<Vec<AElem>, GeometryError> {
        let jet = self.jet(p, 0)?;
        covariant_derivative_with(&jet.gamma, &self.context(p), x, y)
    }
}

fn check_field(n: usize, x: &AVectorField) -> Result<(), GeometryError> {
    if x.dim() != n {
        return Err(GeometryError::DimMismatch { expected: n, got: x.dim() });
    }
    Ok(())
}

/// The coordinate formula for `∇_X Y` with given coefficients.
pub fn covariant_derivative_with(
    gamma: &ConnectionCoeffs,
    ctx: &EvalContext<'_>,
    x: &AVectorField,
    y: &AVectorField,
) -> Result<Vec<AElem>, GeometryError> {
    let n = gamma.dim();
    check_field(n, x)?;
    check_field(n, y)?;
    let xv = x.eval(ctx)?;
    let yv = y.eval(ctx)?;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = x.apply(y.component(k)).eval(ctx)?;
        for i in 0..n {
            for j in 0..n {
                acc += &(&(&xv[i] * &yv[j]) * gamma.get(k, i, j));
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Christoffel symbols and their partials from a metric jet:
/// `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
pub fn levi_civita_jet(m: &MetricJet, order: usize) -> ConnectionJet {
    let n = m.dim();
    let f = m.fibers();
    let dg = m.dg.as_ref().expect("metric jet of order >= 1");
    // first-kind symbols times two, K[l, i, j]
    let k1 = Components::from_fn(n, 3, |x| {
        let (l, i, j) = (x[0], x[1], x[2]);
        &(dg.get(&[i, j, l]) + dg.get(&[j, i, l])) - dg.get(&[l, i, j])
    });
    let half = |e: AElem| e.scale_real(0.5);
    let gamma = Components::from_fn(n, 3, |x| {
        let (k, i, j) = (x[0], x[1], x[2]);
        half((0..n).fold(AElem::zero(f), |acc, l| &acc + &(m.ginv.get(k, l) * k1.get(&[l, i, j]))))
    });
    if order == 0 {
        return ConnectionJet { gamma: ConnectionCoeffs(gamma), d1: None, d2: None };
    }

    let ddg = m.ddg.as_ref().expect("metric jet of order >= 2");
    let slice = |c: &Components, a: usize| AMatrix::from_fn(n, n, |i, j| c.get(&[a, i, j]).clone());
    let mul = |a: &AMatrix, b: &AMatrix| a.matmul(b).expect("square");
    // ∂_a g^{-1} = −g^{-1} ∂_a g g^{-1}
    let dginv: Vec<AMatrix> = (0..n)
        .map(|a| {
            let t = mul(&mul(&m.ginv, &slice(dg, a)), &m.ginv);
            AMatrix::from_fn(n, n, |i, j| -t.get(i, j))
        })
        .collect();
    let dk1 = Components::from_fn(n, 4, |x| {
        let (a, l, i, j) = (x[0], x[1], x[2], x[3]);
        &(ddg.get(&[a, i, j, l]) + ddg.get(&[a, j, i, l])) - ddg.get(&[a, l, i, j])
    });
    let d1 = Components::from_fn(n, 4, |x| {
        let (a, k, i, j) = (x[0], x[1], x[2], x[3]);
        half((0..n).fold(AElem::zero(f), |acc, l| {
            let t = &(dginv[a].get(k, l) * k1.get(&[l, i, j])) + &(m.ginv.get(k, l) * dk1.get(&[a, l, i, j]));
            &acc + &t
        }))
    });
    if order == 1 {
        return ConnectionJet { gamma: ConnectionCoeffs(gamma), d1: Some(d1), d2: None };
    }

    let dddg = m.dddg.as_ref().expect("metric jet of order >= 3");
    // ∂_a ∂_b g^{-1} = g^{-1}(∂_a g g^{-1} ∂_b g + ∂_b g g^{-1} ∂_a g − ∂_a ∂_b g) g^{-1}
    let mut ddginv = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let (ga, gb) = (slice(dg, a), slice(dg, b));
            let gab = AMatrix::from_fn(n, n, |i, j| ddg.get(&[a, b, i, j]).clone());
            let t1 = mul(&mul(&ga, &m.ginv), &gb);
            let t2 = mul(&mul(&gb, &m.ginv), &ga);
            let inner = AMatrix::from_fn(n, n, |i, j| &(t1.get(i, j) + t2.get(i, j)) - gab.get(i, j));
            ddginv.push(mul(&mul(&m.ginv, &inner), &m.ginv));
        }
    }
    let d2 = Components::from_fn(n, 5, |x| {
        let (a, b, k, i, j) = (x[0], x[1], x[2], x[3], x[4]);
        half((0..n).fold(AElem::zero(f), |acc, l| {
            let ddk = &(dddg.get(&[a, b, i, j, l]) + dddg.get(&[a, b, j, i, l])) - dddg.get(&[a, b, l, i, j]);
            let t = &(&(ddginv[a * n + b].get(k, l) * k1.get(&[l, i, j])) + &(dginv[a].get(k, l) * dk1.get(&[b, l, i, j])))
                + &(&(dginv[b].get(k, l) * dk1.get(&[a, l, i, j])) + &(m.ginv.get(k, l) * &ddk));
            &acc + &t
        }))
    });
    ConnectionJet { gamma: ConnectionCoeffs(gamma), d1: Some(d1), d2: Some(d2) }
}

/// The Levi-Civita connection of a metric.
#[derive(Debug, Clone, Copy)]
pub struct LeviCivita<'a> {
    pub metric: &'a MetricField,
}

impl AConnection for LeviCivita<'_> {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn fibers(&self) -> usize {
        self.metric.fibers()
    }

    fn context<'a>(&'a self, p: &'a [f64]) -> EvalContext<'a> {
        self.metric.ctx(p)
    }

    fn jet(&self, p: &[f64], order: usize) -> Result<ConnectionJet, GeometryError> {
        let m = self.metric.jet(p, order + 1)?;
        Ok(levi_civita_jet(&m, order))
    }
}

pub fn christoffel_at(g: &MetricField, p: &[f64]) -> Result<ConnectionCoeffs, GeometryError> {
    Ok(LeviCivita { metric: g }.jet(p, 0)?.gamma)
}

/// A connection given directly by coefficient expressions `Γ^k_ij`.
#[derive(Debug, Clone)]
pub struct CoefficientConnection {
    n: usize,
    gamma: Vec<Expr>,
    constants: BTreeMap<String, AElem>,
    fibers: usize,
}

impl CoefficientConnection {
    /// `gamma[k][i][j]` is `Γ^k_ij`.
    pub fn new(gamma: Vec<Vec<Vec<Expr>>>, constants: BTreeMap<String, AElem>, fibers: usize) -> Result<Self, GeometryError> {
        let n = gamma.len();
        for plane in &gamma {
            if plane.len() != n || plane.iter().any(|row| row.len() != n) {
                return Err(GeometryError::DimMismatch { expected: n, got: plane.len() });
            }
        }
        Ok(Self { n, gamma: gamma.into_iter().flatten().flatten().collect(), constants, fibers })
    }

    /// The zero connection `∇_X Y = X(Y)` in this chart.
    pub fn flat(n: usize, constants: BTreeMap<String, AElem>, fibers: usize) -> Self {
        Self { n, gamma: vec![Expr::zero(); n * n * n], constants, fibers }
    }

    pub fn coefficient(&self, k: usize, i: usize, j: usize) -> &Expr {
        &self.gamma[(k * self.n + i) * self.n + j]
    }
}

impl AConnection for CoefficientConnection {
    fn dim(&self) -> usize {
        self.n
    }

    fn fibers(&self) -> usize {
        self.fibers
    }

    fn context<'a>(&'a self, p: &'a [f64]) -> EvalContext<'a> {
        EvalContext::new(p, &self.constants, self.fibers)
    }

    fn jet(&self, p: &[f64], order: usize) -> Result<ConnectionJet, GeometryError> {
        let ctx = self.context(p);
        let n = self.n;
        let mut err = None;
        let mut eval = |e: Expr| match e.eval(&ctx) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                AElem::zero(self.fibers)
            }
        };
        let gamma = Components::from_fn(n, 3, |x| eval(self.coefficient(x[0], x[1], x[2]).clone()));
        let d1 = (order >= 1).then(|| Components::from_fn(n, 4, |x| eval(self.coefficient(x[1], x[2], x[3]).diff(x[0]))));
        let d2 = (order >= 2)
            .then(|| Components::from_fn(n, 5, |x| eval(self.coefficient(x[2], x[3], x[4]).diff(x[1]).diff(x[0]))));
        if let Some(e) = err {
            return Err(e.into());
        }
        Ok(ConnectionJet { gamma: ConnectionCoeffs(gamma), d1, d2 })
    }
}

pub fn covariant_derivative(
    conn: &dyn AConnection,
    x: &AVectorField,
    y: &AVectorField,
    p: &[f64],
) -> Result<Vec<AElem>, GeometryError> {
    conn.covariant_derivative(x, y, p)
}

/// `T(X,Y) = ∇_X Y − ∇_Y X − [X,Y]` at `p`.
pub fn torsion_at(conn: &dyn AConnection, x: &AVectorField, y: &AVectorField, p: &[f64]) -> Result<Vec<AElem>, GeometryError> {
    let xy = conn.covariant_derivative(x, y, p)?;
    let yx = conn.covariant_derivative(y, x, p)?;
    let br = lie_bracket(x, y)?.eval(&conn.context(p))?;
    Ok(xy.iter().zip(&yx).zip(&br).map(|((a, b), c)| &(a - b) - c).collect())
}

/// `max |∂_k g_ij − Γ^l_ki g_lj − Γ^l_kj g_il|` at the jet's point.
pub fn metric_compatibility_residual(m: &MetricJet, gamma: &ConnectionCoeffs) -> f64 {
    let n = m.dim();
    let dg = m.dg.as_ref().expect("metric jet of order >= 1");
    let mut worst: f64 = 0.0;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut r = dg.get(&[k, i, j]).clone();
                for l in 0..n {
                    r -= &(gamma.get(l, k, i) * m.g.get(l, j));
                    r -= &(gamma.get(l, k, j) * m.g.get(i, l));
                }
                worst = worst.max(r.norm());
            }
        }
    }
    worst
}

/// Largest failure of `D = ∇¹ − ∇²` to be function-linear in either slot,
/// `D(fX,Y) − f D(X,Y)` and `D(X,fY) − f D(X,Y)`, relative to `max(1, |f D(X,Y)|)`.
/// Each connection evaluates the probes in its own context, so any constants
/// they use must have the same values in both.
pub fn connection_difference_residual(
    c1: &dyn AConnection,
    c2: &dyn AConnection,
    xs: &[AVectorField],
    ys: &[AVectorField],
    fs: &[Expr],
    points: &[Vec<f64>],
) -> Result<f64, GeometryError> {
    if c1.dim() != c2.dim() {
        return Err(GeometryError::DimMismatch { expected: c1.dim(), got: c2.dim() });
    }
    let diff = |x: &AVectorField, y: &AVectorField, p: &[f64]| -> Result<Vec<AElem>, GeometryError> {
        let a = c1.covariant_derivative(x, y, p)?;
        let b = c2.covariant_derivative(x, y, p)?;
        Ok(a.iter().zip(&b).map(|(a, b)| a - b).collect())
    };
    let mut worst: f64 = 0.0;
    for p in points {
        for ((x, y), f) in xs.iter().zip(ys).zip(fs) {
            let fv = f.eval(&c1.context(p))?;
            let base: Vec<AElem> = diff(x, y, p)?.iter().map(|d| &fv * d).collect();
            for moved in [diff(&x.scale(f), y, p)?, diff(x, &y.scale(f), p)?] {
                for (m, b) in moved.iter().zip(&base) {
                    worst = worst.max(m.max_abs_diff(b) / b.norm().max(1.0));
                }
            }
        }
    }
    Ok(worst)
}

/// Tensoriality of `∇¹ − ∇²` at tolerance 1e−9.
pub fn connection_difference_is_tensor(
    c1: &dyn AConnection,
    c2: &dyn AConnection,
    xs: &[AVectorField],
    ys: &[AVectorField],
    fs: &[Expr],
    points: &[Vec<f64>],
) -> Result<bool, GeometryError> {
    Ok(connection_difference_residual(c1, c2, xs, ys, fs, points)? <= 1e-9)
}
