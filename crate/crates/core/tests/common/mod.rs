#![allow(dead_code)]

use std::collections::BTreeMap;

use num_complex::Complex64;
use opvg_core::algebra::AElem;
use opvg_core::exprdsl::{EvalContext, Expr};
use rand::Rng;

pub const FIBERS: usize = 2;

/// Constants used by the random generators: `c` complex, `r` positive real.
pub fn constants() -> BTreeMap<String, AElem> {
    let mut m = BTreeMap::new();
    m.insert("c".to_string(), AElem::new(vec![Complex64::new(0.5, 1.0), Complex64::new(-0.3, 0.2)]));
    m.insert("r".to_string(), AElem::from_reals(&[1.0, 2.0]));
    m
}

pub fn ctx<'a>(at: &'a [f64], consts: &'a BTreeMap<String, AElem>) -> EvalContext<'a> {
    EvalContext::new(at, consts, FIBERS)
}

pub fn smooth_expr(rng: &mut impl Rng, n: usize, depth: u32) -> Expr {
    opvg_core::exprdsl::random::smooth_expr(rng, n, &["c".to_string(), "r".to_string()], depth)
}

pub fn point(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// `|a − b| ≤ tol·max(1, |a|, |b|)` fiberwise.
pub fn close(a: &AElem, b: &AElem, tol: f64) -> bool {
    a.values().iter().zip(b.values()).all(|(x, y)| (x - y).norm() <= tol * x.norm().max(y.norm()).max(1.0))
}

pub const COORDS: [&str; 4] = ["u", "v", "w", "z"];

/// Metric from expression rows over coordinates `u, v, w, z`.
pub fn metric(
    rows: &[&[&str]],
    consts: BTreeMap<String, AElem>,
    fibers: usize,
    domain: Vec<(f64, f64)>,
) -> opvg_core::geometry::MetricField {
    let n = rows.len();
    let names: Vec<&str> = consts.keys().map(String::as_str).collect();
    let syms = opvg_core::exprdsl::Symbols::new(&COORDS[..n], &names).unwrap();
    let entries = rows
        .iter()
        .map(|r| r.iter().map(|s| opvg_core::exprdsl::parse(s, &syms).unwrap()).collect())
        .collect();
    let dom = opvg_core::integrate::BoxDomain::new(domain).unwrap();
    let g = opvg_core::geometry::MetricField::new(entries, consts, fibers, dom).unwrap();
    g.validate(&g.domain().grid3()).unwrap();
    g
}

/// Sphere family `diag(r², r² sin(u)²)` with `r = (1, 2)`.
pub fn sphere() -> opvg_core::geometry::MetricField {
    let mut c = BTreeMap::new();
    c.insert("r".to_string(), AElem::from_reals(&[1.0, 2.0]));
    metric(&[&["r^2", "0"], &["0", "r^2*sin(u)^2"]], c, 2, vec![(0.2, 2.9), (0.0, 6.2)])
}

pub fn euclidean(n: usize) -> opvg_core::geometry::MetricField {
    let rows: Vec<Vec<&str>> = (0..n).map(|i| (0..n).map(|j| if i == j { "1" } else { "0" }).collect()).collect();
    let rows: Vec<&[&str]> = rows.iter().map(Vec::as_slice).collect();
    metric(&rows, BTreeMap::new(), 1, vec![(-1.0, 1.0); n])
}

fn random_term(rng: &mut impl Rng, n: usize) -> String {
    let x = COORDS[rng.gen_range(0..n)];
    let y = COORDS[rng.gen_range(0..n)];
    let a: f64 = rng.gen_range(0.2..1.2);
    let b: f64 = rng.gen_range(0.0..1.0);
    match rng.gen_range(0..5) {
        0 => format!("sin({a:.3}*{x} + {b:.3})"),
        1 => format!("cos({a:.3}*{x} + {b:.3})"),
        2 => format!("{x}*{y}"),
        3 => format!("{x}^2"),
        _ => format!("exp({a:.3}*{x})/3"),
    }
}

/// Random diagonally dominant metric on `[-1, 1]^n` with `fibers` fibers and
/// fiber-dependent real constants `k0, k1, k2` (plus an unused complex `c` for
/// random fields); each diagonal entry has a random sign.
pub fn random_metric(rng: &mut impl Rng, n: usize, fibers: usize) -> opvg_core::geometry::MetricField {
    let mut consts = BTreeMap::new();
    for k in 0..3 {
        let vals: Vec<f64> = (0..fibers).map(|_| rng.gen_range(0.5..1.5)).collect();
        consts.insert(format!("k{k}"), AElem::from_reals(&vals));
    }
    let c = (0..fibers).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    consts.insert("c".to_string(), AElem::new(c));
    fn entry(rng: &mut impl Rng, n: usize) -> String {
        let t1 = random_term(rng, n);
        let t2 = random_term(rng, n);
        let (k1, k2) = (rng.gen_range(0..3), rng.gen_range(0..3));
        format!("0.1*k{k1}*{t1} + 0.1*k{k2}*{t2}")
    }
    let mut rows = vec![vec![String::new(); n]; n];
    for i in 0..n {
        let sign = if rng.gen_bool(0.3) { "-" } else { "" };
        rows[i][i] = format!("{sign}(2 + {})", entry(rng, n));
        for j in i + 1..n {
            let e = entry(rng, n);
            rows[i][j] = e.clone();
            rows[j][i] = e;
        }
    }
    let rows: Vec<Vec<&str>> = rows.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
    let rows: Vec<&[&str]> = rows.iter().map(Vec::as_slice).collect();
    metric(&rows, consts, fibers, vec![(-1.0, 1.0); n])
}

/// Uniform point in the interior of a metric's domain.
pub fn interior(rng: &mut impl Rng, g: &opvg_core::geometry::MetricField) -> Vec<f64> {
    let t: Vec<f64> = (0..g.dim()).map(|_| rng.gen_range(0.0..1.0)).collect();
    g.domain().interior_point(&t, 0.05)
}

/// Random smooth expression over the constants of a metric built by [`random_metric`].
pub fn metric_expr(rng: &mut impl Rng, n: usize, depth: u32) -> Expr {
    opvg_core::exprdsl::random::smooth_expr(rng, n, &["c".to_string(), "k0".to_string()], depth)
}
