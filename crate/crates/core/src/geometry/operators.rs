use super::{christoffel_at, singular, AConnection, GeometryError, LeviCivita, MetricField, NU};
use crate::algebra::{AElem, EPS_FC};
use crate::amodule::{signature_of_det, AMatrix};
use crate::exprdsl::{add, call, div, mul, neg, sub, Expr, Func};
use crate::exterior::{combinations, complement, sort_with_sign, MultiVector, OrientedSpace};
use crate::fields::{d, lie_derivative_form, AFormField, AVectorField};

/// `(∇f)^j = g^{ij} ∂_i f` at `p`.
pub fn gradient(g: &MetricField, f: &Expr, p: &[f64]) -> Result<Vec<AElem>, GeometryError> {
    let m = g.jet(p, 0)?;
    let ctx = g.ctx(p);
    let n = g.dim();
    let df = (0..n).map(|i| f.diff(i).eval(&ctx)).collect::<Result<Vec<_>, _>>()?;
    Ok((0..n).map(|j| (0..n).fold(AElem::zero(g.fibers()), |acc, i| &acc + &(m.ginv.get(i, j) * &df[i]))).collect())
}

/// `Hess(f)_ij = ∂_i∂_j f − Γ^k_ij ∂_k f` at `p`.
pub fn hessian(g: &MetricField, f: &Expr, p: &[f64]) -> Result<AMatrix, GeometryError> {
    let gamma = christoffel_at(g, p)?;
    let ctx = g.ctx(p);
    let n = g.dim();
    let df = (0..n).map(|i| f.diff(i).eval(&ctx)).collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut h = f.diff(j).diff(i).eval(&ctx)?;
            for (k, dk) in df.iter().enumerate() {
                h -= &(gamma.get(k, i, j) * dk);
            }
            out.push(h);
        }
    }
    Ok(AMatrix::from_entries(n, n, out))
}

/// `div X = g^{ij} <∇_{∂_i} X, ∂_j>` at `p`.
pub fn divergence(g: &MetricField, x: &AVectorField, p: &[f64]) -> Result<AElem, GeometryError> {
    let lc = LeviCivita { metric: g };
    let m = g.jet(p, 0)?;
    let n = g.dim();
    let mut acc = AElem::zero(g.fibers());
    for i in 0..n {
        let v = lc.covariant_derivative(&AVectorField::coord(n, i), x, p)?;
        for j in 0..n {
            // <v, ∂_j> = v^m g_mj
            let vj = (0..n).fold(AElem::zero(g.fibers()), |a, q| &a + &(&v[q] * m.g.get(q, j)));
            acc += &(m.ginv.get(i, j) * &vj);
        }
    }
    Ok(acc)
}

/// Determinant of the submatrix `rows × cols` of the metric, as an expression.
fn metric_minor(g: &MetricField, rows: &[usize], cols: &[usize]) -> Expr {
    if rows.is_empty() {
        return Expr::one();
    }
    let r = rows[0];
    let rest = &rows[1..];
    let mut acc = Expr::zero();
    for (pos, &c) in cols.iter().enumerate() {
        let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let term = mul(g.entry(r, c).clone(), metric_minor(g, rest, &sub_cols));
        acc = if pos % 2 == 0 { add(acc, term) } else { sub(acc, term) };
    }
    acc
}

/// `sqrt|g| = sqrt(ν det g)` with `ν` bound to the metric's constant table.
pub fn sqrt_abs_g_expr(g: &MetricField) -> Expr {
    let all: Vec<usize> = (0..g.dim()).collect();
    call(Func::Sqrt, mul(Expr::constant(NU), metric_minor(g, &all, &all)))
}

/// Canonical volume form `Ω̃ = sqrt|g| dx^1∧…∧dx^n`.
pub fn volume_form(g: &MetricField) -> AFormField {
    let top: Vec<usize> = (0..g.dim()).collect();
    AFormField::new(g.dim(), g.dim(), [(top, sqrt_abs_g_expr(g))]).expect("valid top-degree key")
}

/// Hodge star of a form as a form. With `dx^i` the reciprocal basis of the
/// coordinate frame, `⋆(dx^I) = sgn(I,I^c) |g|^{-1/2} ∂_{I^c}` and
/// `∂_J = Σ_A det(g[J,A]) dx^A`; the star is conjugate-linear in the coefficients.
pub fn hodge_form(g: &MetricField, w: &AFormField) -> Result<AFormField, GeometryError> {
    let n = g.dim();
    if w.dim() != n {
        return Err(GeometryError::DimMismatch { expected: n, got: w.dim() });
    }
    let k = w.degree();
    let root = sqrt_abs_g_expr(g);
    let targets = combinations(n, n - k);
    let mut comps = Vec::new();
    for (key, coeff) in w.comps() {
        let comp = complement(n, key);
        let full: Vec<usize> = key.iter().chain(&comp).copied().collect();
        let (_, sign) = sort_with_sign(&full).expect("disjoint index sets");
        let c = div(coeff.conj(), root.clone());
        let c = if sign < 0.0 { neg(c) } else { c };
        for a in &targets {
            let minor = metric_minor(g, &comp, a);
            if !minor.is_zero() {
                comps.push((a.clone(), mul(c.clone(), minor)));
            }
        }
    }
    Ok(AFormField::new(n, n - k, comps)?)
}

/// Pointwise Hodge star through the exterior-algebra module, on `dx^I` coefficients.
pub fn hodge_at(g: &MetricField, w: &AFormField, p: &[f64]) -> Result<MultiVector, GeometryError> {
    let space = OrientedSpace::from_gram(g.gram_at(p)?).map_err(|e| singular(p, e))?;
    let rec = w.eval(&g.ctx(p))?;
    let h = space.hodge(&space.from_reciprocal(&rec)?)?;
    Ok(space.to_reciprocal(&h)?)
}

/// `δα = (−1)^{n(k+1)+1} ν ⋆d⋆α`; zero on functions.
pub fn codifferential(g: &MetricField, w: &AFormField) -> Result<AFormField, GeometryError> {
    let n = g.dim();
    let k = w.degree();
    if k == 0 {
        return Ok(AFormField::zero(n, 0));
    }
    let inner = hodge_form(g, &d(&hodge_form(g, w)?))?;
    let sign = if (n * (k + 1) + 1) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(inner.scale(&mul(Expr::Real(sign), Expr::constant(NU))))
}

/// `Δf = −ν ⋆d⋆ df = δ df`, evaluated at `p`.
pub fn laplacian_fn(g: &MetricField, f: &Expr, p: &[f64]) -> Result<AElem, GeometryError> {
    let df = d(&AFormField::function(g.dim(), f.clone()));
    let lap = codifferential(g, &df)?;
    Ok(lap.component(&[]).eval(&g.ctx(p))?)
}

/// `Δf = −|g|^{-1/2} Σ ∂_i(g^{ij} sqrt|g| ∂_j f)` with `∂_i sqrt|g| = ν ∂_i g / (2 sqrt|g|)`.
pub fn laplacian_coordinate(g: &MetricField, f: &Expr, p: &[f64]) -> Result<AElem, GeometryError> {
    let m = g.jet(p, 1)?;
    let ctx = g.ctx(p);
    let n = g.dim();
    let fib = g.fibers();
    let dg = m.dg.as_ref().expect("order 1");
    let root = m.sqrt_abs_g();
    let inv_root = root.inv().map_err(|e| singular(p, e.into()))?;
    let df = (0..n).map(|i| f.diff(i).eval(&ctx)).collect::<Result<Vec<_>, _>>()?;
    let mut total = AElem::zero(fib);
    for i in 0..n {
        let dgi = AMatrix::from_fn(n, n, |a, b| dg.get(&[i, a, b]).clone());
        // ∂_i g = g tr(g^{-1} ∂_i g)
        let prod = m.ginv.matmul(&dgi)?;
        let tr = (0..n).fold(AElem::zero(fib), |acc, a| &acc + prod.get(a, a));
        let d_det = &m.det * &tr;
        let d_root = &(&(&m.nu * &d_det) * &inv_root).scale_real(0.5);
        // ∂_i g^{-1} = −g^{-1} ∂_i g g^{-1}
        let d_ginv = prod.matmul(&m.ginv)?;
        for j in 0..n {
            let dij = f.diff(j).diff(i).eval(&ctx)?;
            let mut t = &(m.ginv.get(i, j) * &dij) - &(d_ginv.get(i, j) * &df[j]);
            t += &(&(m.ginv.get(i, j) * &df[j]) * &(d_root * &inv_root));
            total += &t;
        }
    }
    Ok(-total)
}

/// `ν` at every point; fails if it differs anywhere from the first point by more than `ε_fc`.
pub fn signature_field(g: &MetricField, points: &[Vec<f64>]) -> Result<AElem, GeometryError> {
    let mut common: Option<AElem> = None;
    for p in points {
        let det = g.gram_at(p)?.det()?;
        let nu = signature_of_det(&det).map_err(|e| singular(p, e))?;
        match &common {
            None => common = Some(nu),
            Some(c) => {
                for f in 0..g.fibers() {
                    if (c.get(f) - nu.get(f)).norm() > EPS_FC {
                        return Err(GeometryError::SignatureInconsistent { point: p.clone(), fiber: f });
                    }
                }
            }
        }
    }
    Ok(common.unwrap_or_else(|| g.nu().clone()))
}

/// `(L_X Ω̃ − div(X) Ω̃)(∂_1,…,∂_n)` at `p`.
pub fn lie_volume_check(g: &MetricField, x: &AVectorField, p: &[f64]) -> Result<AElem, GeometryError> {
    let omega = volume_form(g);
    let top: Vec<usize> = (0..g.dim()).collect();
    let lhs = lie_derivative_form(x, &omega)?.component(&top).eval(&g.ctx(p))?;
    let rhs = &divergence(g, x, p)? * &g.jet(p, 0)?.sqrt_abs_g();
    Ok(&lhs - &rhs)
}
