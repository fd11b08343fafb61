//! Classical scalar geometry, one fiber at a time.
//!
//! This is a separate implementation used to cross-check the `A`-valued
//! pipeline: real `f64` metric values, a numerical inverse, the lowered
//! Riemann tensor from its second-derivative formula, the Laplacian as minus
//! the trace of the Hessian, and the Hodge star through raised indices and the
//! Levi-Civita symbol. Only the raw metric partials are shared with the main path.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::exterior::{combinations, sort_with_sign};
use crate::fields::{AFormField, AVectorField};
use crate::algebra::AElem;
use crate::exprdsl::Expr;
use crate::geometry::{
    christoffel_at, curvature_at, divergence, gradient, hessian, hodge_at, hodge_form, laplacian_coordinate,
    laplacian_fn, sectional_from, GeometryError, MetricField,
};

type C = Complex64;

/// Classical quantities of fiber `fiber` at one point.
#[derive(Debug, Clone)]
pub struct FiberGeometry {
    n: usize,
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    det: f64,
    // ∂_a g at dg[a], ∂_a∂_b g at ddg[a * n + b]
    dg: Vec<DMatrix<f64>>,
    ddg: Vec<DMatrix<f64>>,
    gamma: Vec<f64>,
    riem_low: Vec<f64>,
}

impl FiberGeometry {
    pub fn new(metric: &MetricField, p: &[f64], fiber: usize) -> Result<Self, GeometryError> {
        let jet = metric.jet(p, 2)?;
        let n = metric.dim();
        let re = |e: &AElem| e.get(fiber).re;
        let g = DMatrix::from_fn(n, n, |i, j| re(jet.g.get(i, j)));
        let dgc = jet.dg.as_ref().expect("order 2");
        let ddgc = jet.ddg.as_ref().expect("order 2");
        let dg: Vec<_> = (0..n).map(|a| DMatrix::from_fn(n, n, |i, j| re(dgc.get(&[a, i, j])))).collect();
        let ddg: Vec<_> = (0..n * n).map(|ab| DMatrix::from_fn(n, n, |i, j| re(ddgc.get(&[ab / n, ab % n, i, j])))).collect();
        let det = g.determinant();
        let ginv = g.clone().try_inverse().ok_or(GeometryError::PointDegenerate { point: p.to_vec(), fiber })?;
        let mut out = Self { n, g, ginv, det, dg, ddg, gamma: Vec::new(), riem_low: Vec::new() };
        out.gamma = out.compute_gamma();
        out.riem_low = out.compute_riemann_lowered();
        Ok(out)
    }

    fn compute_gamma(&self) -> Vec<f64> {
        let n = self.n;
        let mut gamma = vec![0.0; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += self.ginv[(k, l)] * (self.dg[i][(j, l)] + self.dg[j][(i, l)] - self.dg[l][(i, j)]);
                    }
                    gamma[(k * n + i) * n + j] = 0.5 * s;
                }
            }
        }
        gamma
    }

    /// `Γ^k_ij`.
    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.n + i) * self.n + j]
    }

    fn dd(&self, a: usize, b: usize, i: usize, j: usize) -> f64 {
        self.ddg[a * self.n + b][(i, j)]
    }

    // R_{ρσμν} = ½(∂σ∂μ g_ρν + ∂ρ∂ν g_σμ − ∂σ∂ν g_ρμ − ∂ρ∂μ g_σν)
    //          + g_αβ(Γ^α_σμ Γ^β_ρν − Γ^α_σν Γ^β_ρμ)
    // for the tensor with R(∂μ,∂ν)∂σ = g^{ρλ} R_{λσμν} ∂ρ.
    fn compute_riemann_lowered(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n.pow(4)];
        for r in 0..n {
            for s in 0..n {
                for m in 0..n {
                    for v in 0..n {
                        let mut x = 0.5
                            * (self.dd(s, m, r, v) + self.dd(r, v, s, m) - self.dd(s, v, r, m) - self.dd(r, m, s, v));
                        for a in 0..n {
                            for b in 0..n {
                                x += self.g[(a, b)]
                                    * (self.christoffel(a, s, m) * self.christoffel(b, r, v)
                                        - self.christoffel(a, s, v) * self.christoffel(b, r, m));
                            }
                        }
                        out[((r * n + s) * n + m) * n + v] = x;
                    }
                }
            }
        }
        out
    }

    /// `<R(∂_i,∂_j)∂_k, ∂_l>`.
    pub fn riemann_lowered(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let n = self.n;
        self.riem_low[((l * n + k) * n + i) * n + j]
    }

    /// `R^l_ijk` with `R(∂_i,∂_j)∂_k = R^l_ijk ∂_l`.
    pub fn riemann(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        (0..self.n).map(|q| self.ginv[(l, q)] * self.riemann_lowered(q, i, j, k)).sum()
    }

    pub fn ricci(&self, i: usize, j: usize) -> f64 {
        (0..self.n).map(|k| self.riemann(k, k, i, j)).sum()
    }

    pub fn scalar(&self) -> f64 {
        let n = self.n;
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| self.ginv[(i, j)] * self.ricci(i, j)).sum()
    }

    pub fn nu(&self) -> f64 {
        self.det.signum()
    }

    fn ip(&self, a: &[C], b: &[C]) -> C {
        let mut s = C::new(0.0, 0.0);
        for i in 0..self.n {
            for j in 0..self.n {
                s += a[i] * b[j].conj() * self.g[(i, j)];
            }
        }
        s
    }

    /// Sectional curvature with complex coefficient vectors, `<R(u,v)v̄, u> / Q`.
    pub fn sectional(&self, u: &[C], v: &[C]) -> C {
        let n = self.n;
        let mut num = C::new(0.0, 0.0);
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        num += u[i] * v[j] * v[k].conj() * u[l].conj() * self.riemann_lowered(l, i, j, k);
                    }
                }
            }
        }
        let uv = self.ip(u, v);
        num / (self.ip(u, u) * self.ip(v, v) - uv * uv.conj())
    }

    pub fn gradient(&self, df: &[C]) -> Vec<C> {
        (0..self.n).map(|j| (0..self.n).map(|i| df[i] * self.ginv[(i, j)]).sum()).collect()
    }

    /// `ddf[i][j] = ∂_i∂_j f`.
    pub fn hessian(&self, df: &[C], ddf: &[Vec<C>]) -> Vec<Vec<C>> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| ddf[i][j] - (0..n).map(|k| df[k] * self.christoffel(k, i, j)).sum::<C>()).collect())
            .collect()
    }

    /// `∂_i X^i + Γ^i_ik X^k`, with `dx[i][k] = ∂_i X^k`.
    pub fn divergence(&self, x: &[C], dx: &[Vec<C>]) -> C {
        let n = self.n;
        let mut s = C::new(0.0, 0.0);
        for i in 0..n {
            s += dx[i][i];
            for k in 0..n {
                s += x[k] * self.christoffel(i, i, k);
            }
        }
        s
    }

    /// `Δf = −g^{ij} Hess(f)_ij`.
    pub fn laplacian(&self, df: &[C], ddf: &[Vec<C>]) -> C {
        let h = self.hessian(df, ddf);
        let n = self.n;
        -(0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| h[i][j] * self.ginv[(i, j)]).sum::<C>()
    }

    /// Hodge star of a form given by `dx^I` coefficients: the classical star
    /// `(⋆α)_J = sqrt|g| Σ_I α^I ε_{IJ}` with raised indices, applied to the
    /// conjugated coefficients and multiplied by `ν`.
    pub fn hodge(&self, k: usize, alpha: &BTreeMap<Vec<usize>, C>) -> BTreeMap<Vec<usize>, C> {
        let n = self.n;
        // raised components α^I for increasing I: Σ_A det(g^{-1}[I, A]) α_A
        let raised: Vec<(Vec<usize>, C)> = combinations(n, k)
            .into_iter()
            .map(|i| {
                let s = alpha.iter().map(|(a, v)| v.conj() * minor(&self.ginv, &i, a)).sum::<C>();
                (i, s)
            })
            .collect();
        let root = self.det.abs().sqrt();
        let mut out = BTreeMap::new();
        for j in combinations(n, n - k) {
            let mut s = C::new(0.0, 0.0);
            for (i, v) in &raised {
                let full: Vec<usize> = i.iter().chain(&j).copied().collect();
                if let Some((_, sign)) = sort_with_sign(&full) {
                    s += v * sign;
                }
            }
            out.insert(j, s * root * self.nu());
        }
        out
    }
}

fn minor(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    if rows.is_empty() {
        return 1.0;
    }
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])]).determinant()
}

/// Largest componentwise difference between the `A`-valued pipeline and the
/// per-fiber oracle, one row per quantity.
#[derive(Debug, Clone, Default)]
pub struct OracleReport {
    pub rows: Vec<(String, f64)>,
}

impl OracleReport {
    fn push(&mut self, name: &str, value: f64) {
        match self.rows.iter_mut().find(|(n, _)| n == name) {
            Some((_, v)) => *v = v.max(value),
            None => self.rows.push((name.to_string(), value)),
        }
    }

    pub fn merge(&mut self, other: &OracleReport) {
        for (n, v) in &other.rows {
            self.push(n, *v);
        }
    }

    pub fn max(&self) -> f64 {
        self.rows.iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.rows.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// Inputs for the oracle comparison beyond the metric itself.
#[derive(Debug, Clone)]
pub struct OracleProbe<'a> {
    pub function: &'a Expr,
    pub field: &'a AVectorField,
    pub form: &'a AFormField,
    /// Plane for the sectional curvature, as pointwise coefficient vectors.
    pub plane: (Vec<AElem>, Vec<AElem>),
}

/// Runs every pointwise quantity through both implementations at `p`.
pub fn compare_at(metric: &MetricField, p: &[f64], probe: &OracleProbe<'_>) -> Result<OracleReport, GeometryError> {
    let n = metric.dim();
    let ctx = metric.ctx(p);
    let gamma = christoffel_at(metric, p)?;
    let curv = curvature_at(metric, p)?;
    let gram = metric.gram_at(p)?;
    let k = sectional_from(&curv, &gram, &probe.plane.0, &probe.plane.1).ok();
    let f = probe.function;
    let grad = gradient(metric, f, p)?;
    let hess = hessian(metric, f, p)?;
    let lap_sym = laplacian_fn(metric, f, p)?;
    let lap_coord = laplacian_coordinate(metric, f, p)?;
    let div = divergence(metric, probe.field, p)?;
    let star = hodge_at(metric, probe.form, p)?;
    let star_sym = hodge_form(metric, probe.form)?.eval(&ctx)?;

    let df: Vec<AElem> = (0..n).map(|i| f.diff(i).eval(&ctx)).collect::<Result<_, _>>()?;
    let ddf: Vec<Vec<AElem>> =
        (0..n).map(|i| (0..n).map(|j| f.diff(j).diff(i).eval(&ctx)).collect::<Result<_, _>>()).collect::<Result<_, _>>()?;
    let xv = probe.field.eval(&ctx)?;
    let dx: Vec<Vec<AElem>> = (0..n)
        .map(|i| (0..n).map(|q| probe.field.component(q).diff(i).eval(&ctx)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    let form_vals = probe.form.eval(&ctx)?;

    let mut rep = OracleReport::default();
    let diff = |a: C, b: C| (a - b).norm();
    for fib in 0..metric.fibers() {
        let o = FiberGeometry::new(metric, p, fib)?;
        let at = |e: &AElem| e.get(fib);
        let re = |x: f64| C::new(x, 0.0);
        for (idx, v) in gamma.0.entries() {
            rep.push("christoffel", diff(at(v), re(o.christoffel(idx[0], idx[1], idx[2]))));
        }
        for (idx, v) in curv.riemann.entries() {
            rep.push("riemann", diff(at(v), re(o.riemann(idx[0], idx[1], idx[2], idx[3]))));
        }
        for (idx, v) in curv.ricci.entries() {
            rep.push("ricci", diff(at(v), re(o.ricci(idx[0], idx[1]))));
        }
        rep.push("scalar", diff(at(&curv.scalar), re(o.scalar())));
        rep.push("nu", diff(at(&curv.nu), re(o.nu())));
        if let Some(k) = &k {
            let u: Vec<C> = probe.plane.0.iter().map(at).collect();
            let v: Vec<C> = probe.plane.1.iter().map(at).collect();
            rep.push("sectional", diff(at(k), o.sectional(&u, &v)));
        }
        let dfv: Vec<C> = df.iter().map(at).collect();
        let ddfv: Vec<Vec<C>> = ddf.iter().map(|r| r.iter().map(at).collect()).collect();
        for (j, gj) in o.gradient(&dfv).into_iter().enumerate() {
            rep.push("gradient", diff(at(&grad[j]), gj));
        }
        let oh = o.hessian(&dfv, &ddfv);
        for i in 0..n {
            for j in 0..n {
                rep.push("hessian", diff(at(hess.get(i, j)), oh[i][j]));
            }
        }
        let ol = o.laplacian(&dfv, &ddfv);
        rep.push("laplacian", diff(at(&lap_sym), ol));
        rep.push("laplacian", diff(at(&lap_coord), ol));
        let xs: Vec<C> = xv.iter().map(at).collect();
        let dxs: Vec<Vec<C>> = dx.iter().map(|r| r.iter().map(at).collect()).collect();
        rep.push("divergence", diff(at(&div), o.divergence(&xs, &dxs)));
        let alpha: BTreeMap<Vec<usize>, C> = form_vals.coeffs().iter().map(|(k, v)| (k.clone(), at(v))).collect();
        for (key, v) in o.hodge(probe.form.degree(), &alpha) {
            rep.push("hodge", diff(at(&star.get(&key)), v));
            rep.push("hodge", diff(at(&star_sym.get(&key)), v));
        }
    }
    Ok(rep)
}

/// Coefficient vectors of the coordinate plane `(∂_a, ∂_b)`.
pub fn coordinate_plane(n: usize, fibers: usize, a: usize, b: usize) -> (Vec<AElem>, Vec<AElem>) {
    let unit = |i: usize| (0..n).map(|j| if i == j { AElem::one(fibers) } else { AElem::zero(fibers) }).collect();
    (unit(a), unit(b))
}

