use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use super::report::{IdentityRow, Report};
use super::scene::{Scene, SceneError};
use crate::algebra::{AElem, EPS_FC};
use crate::amodule::LinalgError;
use crate::exprdsl::random::smooth_expr;
use crate::exprdsl::{add, mul, pow, EvalError, Expr, ParseError};
use crate::exterior::{combinations, hodge_pair_residuals, volume_residuals, MultiVector, OrientedSpace};
use crate::fields::{
    cartan, d, involution_field, lie_bracket, lie_derivative_form, AFormField, AVectorField, FieldError,
};
use crate::geometry::{
    codifferential, curvature_at, curvature_symmetry_residuals, first_bianchi_residual, laplacian_coordinate,
    lie_volume_check, divergence, metric_compatibility_residual, ricci_symmetry_residual, second_bianchi_residual,
    sectional_from, signature_field, torsion_at, volume_form, AConnection, GeometryError, LeviCivita,
};
use crate::integrate::{
    adjointness_residual, integrate_form, pettis_integral, stokes_residual, IntegrateError, Quadrature, Scalars,
};
use crate::oracle::{compare_at, coordinate_plane, OracleProbe};

pub const TOL_SIGNATURE: f64 = EPS_FC;
pub const TOL_CHRISTOFFEL_SYMMETRY: f64 = 1e-10;
pub const TOL_TORSION: f64 = 1e-9;
pub const TOL_COMPATIBILITY: f64 = 1e-9;
pub const TOL_BIANCHI_FIRST: f64 = 1e-8;
pub const TOL_BIANCHI_SECOND: f64 = 1e-6;
pub const TOL_CURVATURE_SYMMETRY: f64 = 1e-8;
pub const TOL_RICCI_SYMMETRY: f64 = 1e-9;
pub const TOL_HODGE: f64 = 1e-9;
pub const TOL_FIELDS: f64 = 1e-8;
pub const TOL_LAPLACIAN: f64 = 1e-8;
pub const TOL_ORACLE: f64 = 1e-10;
pub const TOL_STOKES: f64 = 1e-8;
pub const TOL_ADJOINT: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cannot parse `{src}`")]
    Parse {
        src: String,
        #[source]
        source: ParseError,
    },
    #[error("no {kind} named `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("{0}")]
    BadArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { samples: 16, seed: 42 }
    }
}

/// Running maxima of named residuals, kept in first-seen order.
#[derive(Debug, Default)]
struct Rows(Vec<(String, f64, f64)>);

impl Rows {
    fn push(&mut self, name: &str, tolerance: f64, value: f64) {
        // NaN must stick, so compare explicitly
        match self.0.iter_mut().find(|(n, _, _)| n == name) {
            Some((_, _, v)) => {
                if value.is_nan() || value > *v {
                    *v = value;
                }
            }
            None => self.0.push((name.to_string(), tolerance, value)),
        }
    }

    fn finish(self) -> Vec<IdentityRow> {
        self.0.into_iter().map(|(n, t, v)| IdentityRow::new(n, v, t)).collect()
    }
}

fn rel(diff: f64, scale: f64) -> f64 {
    diff / scale.max(1.0)
}

fn vec_diff(a: &[AElem], b: &[AElem]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max)
}

fn vec_norm(a: &[AElem]) -> f64 {
    a.iter().map(AElem::norm).fold(0.0, f64::max)
}

fn form_diff(a: &AFormField, b: &AFormField, scene: &Scene, p: &[f64]) -> Result<(f64, f64), CommandError> {
    let ctx = scene.metric.ctx(p);
    let (va, vb) = (a.eval(&ctx)?, b.eval(&ctx)?);
    let scale = va.coeffs().values().map(AElem::norm).fold(0.0, f64::max);
    Ok((va.max_abs_diff(&vb), scale))
}

fn random_point(rng: &mut ChaCha8Rng, scene: &Scene) -> Vec<f64> {
    let t: Vec<f64> = (0..scene.dim()).map(|_| rng.gen()).collect();
    scene.domain().interior_point(&t, 0.05)
}

fn random_mv(rng: &mut ChaCha8Rng, n: usize, k: usize, fibers: usize) -> MultiVector {
    let dense = combinations(n, k)
        .iter()
        .map(|_| AElem::from_fn(fibers, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    MultiVector::from_dense(n, k, dense)
}

/// Default probes for the oracle comparison when the scene names none.
fn default_probes(n: usize) -> (Expr, AVectorField, AFormField) {
    let x = |i: usize| Expr::Coord(i);
    let f = (0..n).fold(call_sin(x(0)), |acc, i| add(acc, pow(x(i), 2)));
    let field = AVectorField::new((0..n).map(|i| add(x((i + 1) % n), Expr::Real(0.5))).collect());
    let form = AFormField::new(n, 1, [(vec![0], add(Expr::one(), mul(Expr::Real(0.5), x(n - 1))))]).expect("valid key");
    (f, field, form)
}

fn call_sin(e: Expr) -> Expr {
    crate::exprdsl::call(crate::exprdsl::Func::Sin, e)
}

/// Runs the identity suite at `opts.samples` seeded interior points.
pub fn cmd_check(scene: &Scene, opts: &CheckOptions) -> Result<Report, CommandError> {
    let g = &scene.metric;
    let n = scene.dim();
    let fibers = scene.fibers();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let points: Vec<Vec<f64>> = (0..opts.samples).map(|_| random_point(&mut rng, scene)).collect();
    let names: Vec<String> = scene.constants.keys().cloned().collect();

    let mut fields: Vec<AVectorField> = scene.vector_fields.values().cloned().collect();
    for _ in 0..2 {
        fields.push(AVectorField::new((0..n).map(|_| smooth_expr(&mut rng, n, &names, 2)).collect()));
    }
    let mut functions: Vec<Expr> = scene.functions.values().cloned().collect();
    functions.push(smooth_expr(&mut rng, n, &names, 2));
    let mut forms: Vec<AFormField> = scene.forms.values().cloned().collect();
    for k in 0..=n {
        let keys = combinations(n, k);
        forms.push(AFormField::new(n, k, keys.into_iter().map(|key| (key, smooth_expr(&mut rng, n, &names, 2))))?);
    }
    let small: Vec<AVectorField> =
        (0..3).map(|_| AVectorField::new((0..n).map(|_| smooth_expr(&mut rng, n, &names, 1)).collect())).collect();

    // symbolic identities, built once and evaluated at every point
    let mut involution = Vec::new();
    for x in &fields {
        for f in &functions {
            involution.push((x.apply(f).conj(), involution_field(x).apply(&f.conj())));
        }
    }
    let mut brackets = Vec::new();
    for pair in fields.windows(2) {
        let lhs = involution_field(&lie_bracket(&pair[0], &pair[1])?);
        let rhs = lie_bracket(&involution_field(&pair[0]), &involution_field(&pair[1]))?;
        brackets.push((lhs, rhs));
    }
    let [a, b, c] = [&small[0], &small[1], &small[2]];
    let jacobi = lie_bracket(a, &lie_bracket(b, c)?)?
        .add(&lie_bracket(b, &lie_bracket(c, a)?)?)?
        .add(&lie_bracket(c, &lie_bracket(a, b)?)?)?;
    let mut cartans = Vec::new();
    for w in &forms {
        for x in fields.iter().take(2) {
            cartans.push((lie_derivative_form(x, w)?, cartan(x, w)?));
        }
    }
    let mut laplacians = Vec::new();
    for f in &functions {
        laplacians.push((f.clone(), codifferential(g, &d(&AFormField::function(n, f.clone())))?.component(&[])));
    }
    let (pf, px, pw) = default_probes(n);
    let probe = OracleProbe {
        function: scene.functions.values().next().unwrap_or(&pf),
        field: scene.vector_fields.values().next().unwrap_or(&px),
        form: scene.forms.values().next().unwrap_or(&pw),
        plane: coordinate_plane(n, fibers, 0, 1.min(n - 1)),
    };

    let lc = LeviCivita { metric: g };
    let active: &dyn AConnection = match &scene.connection {
        Some(c) => c,
        None => &lc,
    };
    let mut rows = Rows::default();

    let mut grid = g.domain().grid3();
    grid.extend(points.iter().cloned());
    let mut worst_nu: f64 = 0.0;
    for p in &grid {
        let det = g.gram_at(p)?.det()?;
        let nu = crate::amodule::signature_of_det(&det).map(|v| v.max_abs_diff(g.nu())).unwrap_or(f64::INFINITY);
        worst_nu = worst_nu.max(nu);
    }
    rows.push("signature_constancy", TOL_SIGNATURE, worst_nu);
    let nu = signature_field(g, &grid).unwrap_or_else(|_| g.nu().clone());

    for p in &points {
        let ctx = g.ctx(p);
        let gamma = active.jet(p, 0)?.gamma;
        rows.push("christoffel_symmetry", TOL_CHRISTOFFEL_SYMMETRY, gamma.asymmetry());
        rows.push("metric_compatibility", TOL_COMPATIBILITY, metric_compatibility_residual(&g.jet(p, 1)?, &gamma));
        let mut pairs: Vec<(AVectorField, AVectorField)> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((AVectorField::coord(n, i), AVectorField::coord(n, j)));
            }
        }
        for w in fields.windows(2) {
            pairs.push((w[0].clone(), w[1].clone()));
        }
        for (x, y) in &pairs {
            let t = torsion_at(active, x, y, p)?;
            let scale = vec_norm(&active.covariant_derivative(x, y, p)?);
            rows.push("torsion", TOL_TORSION, rel(vec_norm(&t), scale));
        }

        let curv = curvature_at(g, p)?;
        let scale = curv.riemann.max_abs();
        rows.push("bianchi_first", TOL_BIANCHI_FIRST, rel(first_bianchi_residual(&curv.riemann), scale));
        rows.push("bianchi_second", TOL_BIANCHI_SECOND, rel(second_bianchi_residual(&lc, p)?, scale));
        let (skew, pair) = curvature_symmetry_residuals(&curv);
        rows.push("curvature_skew_symmetry", TOL_CURVATURE_SYMMETRY, rel(skew, scale));
        rows.push("curvature_pair_symmetry", TOL_CURVATURE_SYMMETRY, rel(pair, scale));
        rows.push("ricci_symmetry", TOL_RICCI_SYMMETRY, rel(ricci_symmetry_residual(&curv), scale));

        let space = OrientedSpace::from_gram(g.gram_at(p)?)?;
        for k in 0..=n {
            let a = random_mv(&mut rng, n, k, fibers);
            let b = random_mv(&mut rng, n, k, fibers);
            let [ss, wedge, inner] = hodge_pair_residuals(&space, &a, &b)?;
            rows.push("hodge_star_star", TOL_HODGE, ss);
            rows.push("hodge_wedge_inner", TOL_HODGE, wedge);
            rows.push("hodge_inner_conjugate", TOL_HODGE, inner);
        }
        let [norm, star_one, star_om] = volume_residuals(&space)?;
        rows.push("volume_norm_is_nu", TOL_HODGE, norm);
        rows.push("hodge_of_one", TOL_HODGE, star_one);
        rows.push("hodge_of_volume", TOL_HODGE, star_om);

        for (lhs, rhs) in &involution {
            let (l, r) = (lhs.eval(&ctx)?, rhs.eval(&ctx)?);
            rows.push("involution", TOL_FIELDS, rel(l.max_abs_diff(&r), l.norm()));
        }
        for (lhs, rhs) in &brackets {
            let (l, r) = (lhs.eval(&ctx)?, rhs.eval(&ctx)?);
            rows.push("involution_bracket", TOL_FIELDS, rel(vec_diff(&l, &r), vec_norm(&l)));
        }
        let terms = [
            lie_bracket(a, &lie_bracket(b, c)?)?.eval(&ctx)?,
            lie_bracket(b, &lie_bracket(c, a)?)?.eval(&ctx)?,
        ];
        let scale = terms.iter().map(|t| vec_norm(t)).fold(0.0, f64::max);
        rows.push("jacobi", TOL_FIELDS, rel(vec_norm(&jacobi.eval(&ctx)?), scale));
        for (lhs, rhs) in &cartans {
            let (diff, scale) = form_diff(lhs, rhs, scene, p)?;
            rows.push("cartan", TOL_FIELDS, rel(diff, scale));
        }
        for x in &fields {
            let scale = (&divergence(g, x, p)? * &g.jet(p, 0)?.sqrt_abs_g()).norm();
            rows.push("lie_volume", TOL_FIELDS, rel(lie_volume_check(g, x, p)?.norm(), scale));
        }
        for (f, star_path) in &laplacians {
            let a = star_path.eval(&ctx)?;
            let b = laplacian_coordinate(g, f, p)?;
            rows.push("laplacian_dual_path", TOL_LAPLACIAN, rel(a.max_abs_diff(&b), a.norm()));
        }
        let rep = compare_at(g, p, &probe)?;
        rows.push("fiberwise_oracle", TOL_ORACLE, rep.max());
    }

    let results = json!({
        "samples": opts.samples,
        "seed": opts.seed,
        "connection": if scene.connection.is_some() { "scene" } else { "levi-civita" },
        "nu": nu,
        "points": points,
    });
    Ok(Report::new("check", &scene.digest, results, rows.finish()))
}

/// One end of a plane: a coordinate index, a coordinate name or a vector field name.
fn resolve_direction(scene: &Scene, token: &str, p: &[f64]) -> Result<Vec<AElem>, CommandError> {
    let n = scene.dim();
    let coord = token
        .parse::<usize>()
        .ok()
        .filter(|&i| i < n)
        .or_else(|| scene.coordinates.iter().position(|c| c == token));
    if let Some(i) = coord {
        return Ok(coordinate_plane(n, scene.fibers(), i, i).0);
    }
    match scene.vector_fields.get(token) {
        Some(x) => Ok(x.eval(&scene.metric.ctx(p))?),
        None => Err(CommandError::Unknown { kind: "plane direction", name: token.to_string() }),
    }
}

/// Christoffel symbols, curvature, `ν` and sectional curvatures at one point.
pub fn cmd_invariants(scene: &Scene, point: &[f64], planes: &[(String, String)]) -> Result<Report, CommandError> {
    let g = &scene.metric;
    if point.len() != scene.dim() {
        return Err(GeometryError::DimMismatch { expected: scene.dim(), got: point.len() }.into());
    }
    let gamma = crate::geometry::christoffel_at(g, point)?;
    let c = curvature_at(g, point)?;
    let gram = g.gram_at(point)?;
    let mut sectional = Vec::new();
    for (a, b) in planes {
        let u = resolve_direction(scene, a, point)?;
        let v = resolve_direction(scene, b, point)?;
        let k = sectional_from(&c, &gram, &u, &v)?;
        sectional.push(json!({ "plane": [a, b], "value": k }));
    }
    let results = json!({
        "point": point,
        "christoffel": gamma.0,
        "riemann": c.riemann,
        "lowered_riemann": c.lowered,
        "ricci": c.ricci,
        "scalar": c.scalar,
        "nu": c.nu,
        "sectional": sectional,
    });
    Ok(Report::new("invariants", &scene.digest, results, Vec::new()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntegrateTarget {
    /// A named top-degree form; `vol` falls back to the canonical volume form.
    Form(String),
    /// A named scene function, or else an expression over the scene's coordinates and constants.
    Function(String),
    /// Stokes check for a named `(n−1)`-form.
    Stokes(String),
    /// `(dβ, α) = (β, δα)` for named forms `β` and `α`.
    Adjoint { beta: String, alpha: String },
}

fn named_form(scene: &Scene, name: &str) -> Result<AFormField, CommandError> {
    match scene.forms.get(name) {
        Some(w) => Ok(w.clone()),
        None if name == "vol" => Ok(volume_form(&scene.metric)),
        None => Err(CommandError::Unknown { kind: "form", name: name.to_string() }),
    }
}

pub fn cmd_integrate(scene: &Scene, target: &IntegrateTarget, q: &Quadrature) -> Result<Report, CommandError> {
    let g = &scene.metric;
    let dom = g.domain();
    let s = Scalars::of(g);
    let quad = json!({ "m": q.order(), "s": q.subdivisions() });
    let (results, rows) = match target {
        IntegrateTarget::Form(name) => {
            let w = named_form(scene, name)?;
            let value = integrate_form(&w, dom, q, s)?;
            (json!({ "form": name, "value": value, "quadrature": quad }), Vec::new())
        }
        IntegrateTarget::Function(src) => {
            let f = match scene.functions.get(src) {
                Some(f) => f.clone(),
                None => scene.parse_expr(src).map_err(|source| CommandError::Parse { src: src.clone(), source })?,
            };
            let value = pettis_integral(&f, dom, q, s)?;
            (json!({ "function": src, "value": value, "quadrature": quad }), Vec::new())
        }
        IntegrateTarget::Stokes(name) => {
            let w = named_form(scene, name)?;
            let r = stokes_residual(&w, dom, q, s)?;
            let row = IdentityRow::new("stokes", r.residual.norm(), TOL_STOKES);
            (json!({ "form": name, "interior": r.interior, "boundary": r.boundary, "quadrature": quad }), vec![row])
        }
        IntegrateTarget::Adjoint { beta, alpha } => {
            let (b, a) = (named_form(scene, beta)?, named_form(scene, alpha)?);
            let r = adjointness_residual(g, &b, &a, dom, q)?;
            let row = IdentityRow::new("adjointness", r.residual.norm(), TOL_ADJOINT);
            let res = json!({ "beta": beta, "alpha": alpha, "d_side": r.d_side, "delta_side": r.delta_side, "quadrature": quad });
            (res, vec![row])
        }
    };
    Ok(Report::new("integrate", &scene.digest, results, rows))
}

/// `x1,x2,...` as a point.
pub fn parse_point(s: &str) -> Result<Vec<f64>, CommandError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CommandError::BadArgument(format!("bad coordinate `{t}` in `{s}`"))))
        .collect()
}

/// `A,B` as a plane.
pub fn parse_plane(s: &str) -> Result<(String, String), CommandError> {
    match s.split(',').map(str::trim).collect::<Vec<_>>()[..] {
        [a, b] if !a.is_empty() && !b.is_empty() => Ok((a.to_string(), b.to_string())),
        _ => Err(CommandError::BadArgument(format!("plane `{s}` must be two names or indices separated by a comma"))),
    }
}

/// `m,s` as a quadrature rule.
pub fn parse_quad(s: &str) -> Result<Quadrature, CommandError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || CommandError::BadArgument(format!("quadrature `{s}` must be `m,s`"));
    match parts[..] {
        [m, k] => Ok(Quadrature::new(m.parse().map_err(|_| bad())?, k.parse().map_err(|_| bad())?)?),
        _ => Err(bad()),
    }
}
