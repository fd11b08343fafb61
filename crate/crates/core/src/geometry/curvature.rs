use serde::Serialize;

use super::{levi_civita_jet, AConnection, Components, ConnectionJet, GeometryError, MetricField};
use crate::algebra::{AElem, AlgebraError};
use crate::amodule::AMatrix;

/// Curvature data at one point.
///
/// `riemann[l, i, j, k] = R^l_ijk` with `R(∂_i, ∂_j)∂_k = R^l_ijk ∂_l` and
/// `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`; `lowered[l, i, j, k] = g_lm R^m_ijk
/// = <R(∂_i,∂_j)∂_k, ∂_l>`; `ricci[i, j] = R^k_kij`; `scalar = g^ij Ric_ij`.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureAtPoint {
    pub point: Vec<f64>,
    pub riemann: Components,
    pub lowered: Components,
    pub ricci: Components,
    pub scalar: AElem,
    pub nu: AElem,
}

/// `R^l_ijk = ∂_iΓ^l_jk − ∂_jΓ^l_ik + Γ^m_jk Γ^l_im − Γ^m_ik Γ^l_jm`.
pub fn riemann_from_jet(jet: &ConnectionJet) -> Components {
    let g = &jet.gamma;
    let d1 = jet.d1.as_ref().expect("connection jet of order >= 1");
    let n = g.dim();
    Components::from_fn(n, 4, |x| {
        let (l, i, j, k) = (x[0], x[1], x[2], x[3]);
        let mut r = d1.get(&[i, l, j, k]) - d1.get(&[j, l, i, k]);
        for m in 0..n {
            r += &(g.get(m, j, k) * g.get(l, i, m));
            r -= &(g.get(m, i, k) * g.get(l, j, m));
        }
        r
    })
}

/// `∂_a R^l_ijk` at index `[a, l, i, j, k]`.
fn riemann_partials(jet: &ConnectionJet) -> Components {
    let g = &jet.gamma;
    let d1 = jet.d1.as_ref().expect("connection jet of order >= 1");
    let d2 = jet.d2.as_ref().expect("connection jet of order >= 2");
    let n = g.dim();
    Components::from_fn(n, 5, |x| {
        let (a, l, i, j, k) = (x[0], x[1], x[2], x[3], x[4]);
        let mut r = d2.get(&[a, i, l, j, k]) - d2.get(&[a, j, l, i, k]);
        for m in 0..n {
            r += &(d1.get(&[a, m, j, k]) * g.get(l, i, m));
            r += &(g.get(m, j, k) * d1.get(&[a, l, i, m]));
            r -= &(d1.get(&[a, m, i, k]) * g.get(l, j, m));
            r -= &(g.get(m, i, k) * d1.get(&[a, l, j, m]));
        }
        r
    })
}

/// `(∇_a R)^l_ijk` at index `[a, l, i, j, k]`.
pub fn riemann_covariant_derivative(jet: &ConnectionJet) -> Components {
    let g = &jet.gamma;
    let riem = riemann_from_jet(jet);
    let dr = riemann_partials(jet);
    let n = g.dim();
    Components::from_fn(n, 5, |x| {
        let (a, l, i, j, k) = (x[0], x[1], x[2], x[3], x[4]);
        let mut r = dr.get(x).clone();
        for m in 0..n {
            r += &(g.get(l, a, m) * riem.get(&[m, i, j, k]));
            r -= &(g.get(m, a, i) * riem.get(&[l, m, j, k]));
            r -= &(g.get(m, a, j) * riem.get(&[l, i, m, k]));
            r -= &(g.get(m, a, k) * riem.get(&[l, i, j, m]));
        }
        r
    })
}

pub fn curvature_at(g: &MetricField, p: &[f64]) -> Result<CurvatureAtPoint, GeometryError> {
    let m = g.jet(p, 2)?;
    let jet = levi_civita_jet(&m, 1);
    let n = g.dim();
    let f = g.fibers();
    let riemann = riemann_from_jet(&jet);
    let lowered = Components::from_fn(n, 4, |x| {
        (0..n).fold(AElem::zero(f), |acc, q| &acc + &(m.g.get(x[0], q) * riemann.get(&[q, x[1], x[2], x[3]])))
    });
    let ricci = Components::from_fn(n, 2, |x| (0..n).fold(AElem::zero(f), |acc, k| &acc + riemann.get(&[k, k, x[0], x[1]])));
    let mut scalar = AElem::zero(f);
    for i in 0..n {
        for j in 0..n {
            scalar += &(m.ginv.get(i, j) * ricci.get(&[i, j]));
        }
    }
    Ok(CurvatureAtPoint { point: p.to_vec(), riemann, lowered, ricci, scalar, nu: m.nu })
}

/// `max |R^l_ijk + R^l_jki + R^l_kij|`.
pub fn first_bianchi_residual(riemann: &Components) -> f64 {
    let n = riemann.n();
    let mut worst: f64 = 0.0;
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let s = &(riemann.get(&[l, i, j, k]) + riemann.get(&[l, j, k, i])) + riemann.get(&[l, k, i, j]);
                    worst = worst.max(s.norm());
                }
            }
        }
    }
    worst
}

/// `max |(∇_a R)^l_ijk + (∇_i R)^l_jak + (∇_j R)^l_aik|` at `p`.
pub fn second_bianchi_residual(conn: &dyn AConnection, p: &[f64]) -> Result<f64, GeometryError> {
    let jet = conn.jet(p, 2)?;
    let nr = riemann_covariant_derivative(&jet);
    let n = conn.dim();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let s = &(nr.get(&[a, l, i, j, k]) + nr.get(&[i, l, j, a, k])) + nr.get(&[j, l, a, i, k]);
                        worst = worst.max(s.norm());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Residuals of the two printed curvature symmetries on coordinate fields:
/// `<R(∂i,∂j)∂k,∂l> + <R(∂i,∂j)∂l,∂k>` and `<R(∂i,∂j)∂k,∂l> − <R(∂k,∂l)∂i,∂j>`.
pub fn curvature_symmetry_residuals(c: &CurvatureAtPoint) -> (f64, f64) {
    let n = c.lowered.n();
    let rm = |i: usize, j: usize, k: usize, l: usize| c.lowered.get(&[l, i, j, k]);
    let (mut skew, mut pair): (f64, f64) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    skew = skew.max((rm(i, j, k, l) + rm(i, j, l, k)).norm());
                    pair = pair.max(rm(i, j, k, l).max_abs_diff(rm(k, l, i, j)));
                }
            }
        }
    }
    (skew, pair)
}

pub fn ricci_symmetry_residual(c: &CurvatureAtPoint) -> f64 {
    let n = c.ricci.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max(c.ricci.get(&[i, j]).max_abs_diff(c.ricci.get(&[j, i])));
        }
    }
    worst
}

/// `max |R^l_ijk − C(g_jk δ^l_i − g_ik δ^l_j)|`, the coordinate form of
/// `R(u,v)w = C(<v,w*>u − <u,w*>v)`.
pub fn constant_curvature_residual(c: &CurvatureAtPoint, gram: &AMatrix, curvature: &AElem) -> f64 {
    let n = c.riemann.n();
    let f = curvature.fibers();
    let mut worst: f64 = 0.0;
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut want = AElem::zero(f);
                    if l == i {
                        want += gram.get(j, k);
                    }
                    if l == j {
                        want -= gram.get(i, k);
                    }
                    worst = worst.max(c.riemann.get(&[l, i, j, k]).max_abs_diff(&(curvature * &want)));
                }
            }
        }
    }
    worst
}

/// `R(x,y)z` for pointwise vectors.
pub fn apply_riemann(riemann: &Components, x: &[AElem], y: &[AElem], z: &[AElem]) -> Vec<AElem> {
    let n = riemann.n();
    let f = x[0].fibers();
    (0..n)
        .map(|l| {
            let mut acc = AElem::zero(f);
            for i in 0..n {
                for j in 0..n {
                    let xy = &x[i] * &y[j];
                    for k in 0..n {
                        acc += &(&(&xy * &z[k]) * riemann.get(&[l, i, j, k]));
                    }
                }
            }
            acc
        })
        .collect()
}

/// `<a, b> = a^i conj(b^j) g_ij`.
pub fn inner_at(gram: &AMatrix, a: &[AElem], b: &[AElem]) -> AElem {
    let n = gram.rows();
    let mut acc = AElem::zero(gram.fibers());
    for i in 0..n {
        for j in 0..n {
            acc += &(&(&a[i] * &b[j].conj()) * gram.get(i, j));
        }
    }
    acc
}

fn conj_vec(v: &[AElem]) -> Vec<AElem> {
    v.iter().map(AElem::conj).collect()
}

/// `K(u,v) = <R(u,v)v*, u> / Q(u,v)` from precomputed curvature.
pub fn sectional_from(c: &CurvatureAtPoint, gram: &AMatrix, u: &[AElem], v: &[AElem]) -> Result<AElem, GeometryError> {
    let n = c.riemann.n();
    for w in [u, v] {
        if w.len() != n {
            return Err(GeometryError::DimMismatch { expected: n, got: w.len() });
        }
    }
    let uv = inner_at(gram, u, v);
    let q = &(&inner_at(gram, u, u) * &inner_at(gram, v, v)) - &(&uv * &uv.conj());
    let q_inv = q.inv().map_err(|e| match e {
        AlgebraError::NotInvertible { fiber, .. } => GeometryError::DegeneratePlane { fiber },
        other => GeometryError::Linalg(other.into()),
    })?;
    let num = inner_at(gram, &apply_riemann(&c.riemann, u, v, &conj_vec(v)), u);
    Ok(&num * &q_inv)
}

pub fn sectional(g: &MetricField, p: &[f64], u: &[AElem], v: &[AElem]) -> Result<AElem, GeometryError> {
    let c = curvature_at(g, p)?;
    sectional_from(&c, &g.gram_at(p)?, u, v)
}
