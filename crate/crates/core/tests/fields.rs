mod common;

use common::{close, constants, ctx, point, smooth_expr};
use num_complex::Complex64;
use opvg_core::algebra::AElem;
use opvg_core::exprdsl::{mul, parse, Expr, Symbols};
use opvg_core::fields::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn syms() -> Symbols {
    Symbols::new(&["u", "v", "w"], &["c", "r"]).unwrap()
}

fn p(src: &str) -> Expr {
    parse(src, &syms()).unwrap()
}

fn vf(srcs: &[&str]) -> AVectorField {
    AVectorField::new(srcs.iter().map(|s| p(s)).collect())
}

fn random_vf(rng: &mut impl Rng, n: usize, depth: u32) -> AVectorField {
    AVectorField::new((0..n).map(|_| smooth_expr(rng, n, depth)).collect())
}

fn random_form(rng: &mut impl Rng, n: usize, k: usize, depth: u32) -> AFormField {
    let keys = opvg_core::exterior::combinations(n, k);
    AFormField::new(n, k, keys.into_iter().map(|key| (key, smooth_expr(rng, n, depth)))).unwrap()
}

fn eval(e: &Expr, at: &[f64]) -> AElem {
    let c = constants();
    e.eval(&ctx(at, &c)).unwrap()
}

fn forms_close(a: &AFormField, b: &AFormField, at: &[f64], tol: f64) -> bool {
    let keys = opvg_core::exterior::combinations(a.dim(), a.degree());
    a.degree() == b.degree() && keys.iter().all(|k| close(&eval(&a.component(k), at), &eval(&b.component(k), at), tol))
}

fn fields_close(a: &AVectorField, b: &AVectorField, at: &[f64], tol: f64) -> bool {
    a.comps().iter().zip(b.comps()).all(|(x, y)| close(&eval(x, at), &eval(y, at), tol))
}

const AT: [f64; 3] = [0.3, -0.7, 1.1];

#[test]
fn apply_examples() {
    let du = AVectorField::coord(2, 0);
    assert_eq!(apply_vf(&du, &p("u^2"), 2).unwrap(), p("2*u"));
    let cdu = AVectorField::simple(2, 0, p("c"));
    assert_eq!(apply_vf(&cdu, &p("u"), 2).unwrap(), p("c"));
    assert!(matches!(apply_vf(&du, &p("w"), 2), Err(FieldError::DimMismatch { .. })));
    assert!(matches!(apply_vf(&du, &p("u"), 3), Err(FieldError::DimMismatch { .. })));
}

#[test]
fn apply_is_function_linear_and_leibniz() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let x = random_vf(&mut rng, 3, 3);
        let (f, g, h) = (smooth_expr(&mut rng, 3, 3), smooth_expr(&mut rng, 3, 3), smooth_expr(&mut rng, 3, 3));
        let at = point(&mut rng, 3);
        let lhs = eval(&x.apply(&mul(f.clone(), g.clone())), &at);
        let rhs = &(&eval(&x.apply(&f), &at) * &eval(&g, &at)) + &(&eval(&f, &at) * &eval(&x.apply(&g), &at));
        assert!(close(&lhs, &rhs, 1e-9));
        // (hX)(f) = h·X(f)
        let lhs = eval(&x.scale(&h).apply(&f), &at);
        let rhs = &eval(&h, &at) * &eval(&x.apply(&f), &at);
        assert!(close(&lhs, &rhs, 1e-9));
    }
}

#[test]
fn bracket_examples() {
    let du = AVectorField::coord(2, 0);
    let dv = AVectorField::coord(2, 1);
    assert_eq!(lie_bracket(&du, &dv).unwrap(), AVectorField::zero(2));
    let udv = vf(&["0", "u"]);
    assert_eq!(lie_bracket(&du, &udv).unwrap(), dv);
    let cdu = vf(&["c", "0"]);
    let got = lie_bracket(&cdu, &udv).unwrap();
    assert_eq!(got, vf(&["0", "c"]));
    assert!(lie_bracket(&du, &AVectorField::coord(3, 0)).is_err());
}

// [X⊗h, Y⊗k] = [X,Y]⊗hk + Y⊗h X(k) − X⊗k Y(h), expanded for simple fields.
#[test]
fn bracket_matches_simple_field_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..40 {
        let n = 3;
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let (h, k) = (smooth_expr(&mut rng, n, 3), smooth_expr(&mut rng, n, 3));
        let xi = AVectorField::coord(n, i);
        let yj = AVectorField::coord(n, j);
        let got = lie_bracket(&xi.scale(&h), &yj.scale(&k)).unwrap();
        let want = yj.scale(&mul(h.clone(), xi.apply(&k))).sub(&xi.scale(&mul(k.clone(), yj.apply(&h)))).unwrap();
        let at = point(&mut rng, n);
        assert!(fields_close(&got, &want, &at, 1e-10));
    }
}

#[test]
fn bracket_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let (x, y, z) = (random_vf(&mut rng, 3, 2), random_vf(&mut rng, 3, 2), random_vf(&mut rng, 3, 2));
        let at = point(&mut rng, 3);
        let xy = lie_bracket(&x, &y).unwrap();
        let yx = lie_bracket(&y, &x).unwrap();
        assert!(fields_close(&xy, &yx.scale(&Expr::Real(-1.0)), &at, 1e-9));
        let jac = lie_bracket(&x, &lie_bracket(&y, &z).unwrap())
            .unwrap()
            .add(&lie_bracket(&y, &lie_bracket(&z, &x).unwrap()).unwrap())
            .unwrap()
            .add(&lie_bracket(&z, &xy).unwrap())
            .unwrap();
        assert!(fields_close(&jac, &AVectorField::zero(3), &at, 1e-9), "Jacobi at {at:?}");
    }
}

#[test]
fn involution_examples() {
    let real = vf(&["u*v", "sin(u)"]);
    let conj_real = involution_field(&real);
    assert!(fields_close(&conj_real, &real, &AT, 0.0));
    let cdu = vf(&["c", "0"]);
    let got = involution_field(&cdu);
    let want = eval(&p("c"), &AT).conj();
    assert_eq!(eval(got.component(0), &AT), want);
    assert_eq!(eval(got.component(1), &AT), AElem::zero(2));
}

#[test]
fn involution_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let (x, y) = (random_vf(&mut rng, 3, 3), random_vf(&mut rng, 3, 3));
        let f = smooth_expr(&mut rng, 3, 3);
        let at = point(&mut rng, 3);
        // X(f)* = X*(f*)
        let lhs = eval(&x.apply(&f), &at).conj();
        let rhs = eval(&involution_field(&x).apply(&f.conj()), &at);
        assert!(close(&lhs, &rhs, 1e-10));
        // [X,Y]* = [X*,Y*]
        let lhs = involution_field(&lie_bracket(&x, &y).unwrap());
        let rhs = lie_bracket(&involution_field(&x), &involution_field(&y)).unwrap();
        assert!(fields_close(&lhs, &rhs, &at, 1e-10));
    }
    let w = random_form(&mut rng, 3, 2, 2);
    let wc = involution_form(&involution_form(&w));
    assert!(forms_close(&w, &wc, &AT, 0.0));
}

#[test]
fn exterior_derivative_examples() {
    let w = AFormField::new(2, 1, [(vec![0], p("u*v")), (vec![1], p("u^2"))]).unwrap();
    let dw = d(&w);
    assert_eq!(dw.degree(), 2);
    // ∂_u(u²) − ∂_v(uv) = 2u − u
    assert!(close(&eval(&dw.component(&[0, 1]), &[0.7, 0.4]), &AElem::real(2, 0.7), 1e-15));

    let w = AFormField::new(2, 1, [(vec![1], p("c*u"))]).unwrap();
    assert_eq!(d(&w).component(&[0, 1]), p("c"));

    let top = AFormField::new(2, 2, [(vec![0, 1], p("u"))]).unwrap();
    let dtop = d(&top);
    assert_eq!((dtop.degree(), dtop.comps().len()), (3, 0));
}

#[test]
fn d_squared_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..3 {
        for _ in 0..10 {
            let w = random_form(&mut rng, 3, k, 3);
            let dd = d(&d(&w));
            let at = point(&mut rng, 3);
            assert!(forms_close(&dd, &AFormField::zero(3, k + 2), &at, 1e-12));
        }
    }
}

#[test]
fn interior_examples() {
    let vol = AFormField::new(2, 2, [(vec![0, 1], Expr::one())]).unwrap();
    let du = AVectorField::coord(2, 0);
    let got = interior(&du, &vol).unwrap();
    assert_eq!(got, AFormField::new(2, 1, [(vec![1], Expr::one())]).unwrap());

    let one = AFormField::new(2, 1, [(vec![0], Expr::one())]).unwrap();
    let cdu = AVectorField::simple(2, 0, p("c"));
    assert_eq!(interior(&cdu, &one).unwrap().component(&[]), p("c"));

    assert_eq!(interior(&du, &AFormField::function(2, p("u"))), Err(FieldError::DegreeZero));

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 2..=3 {
        let w = random_form(&mut rng, 3, k, 2);
        let x = random_vf(&mut rng, 3, 2);
        let twice = interior(&x, &interior(&x, &w).unwrap()).unwrap();
        let at = point(&mut rng, 3);
        assert!(forms_close(&twice, &AFormField::zero(3, k - 2), &at, 1e-12));
    }
}

// i_X ω evaluated as ω(X, Y_2, …) through the tensor application.
#[test]
fn interior_is_first_slot_contraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let w = random_form(&mut rng, 3, 2, 2);
        let (x, y) = (random_vf(&mut rng, 3, 2), random_vf(&mut rng, 3, 2));
        let at = point(&mut rng, 3);
        let lhs = eval(&interior(&x, &w).unwrap().apply(std::slice::from_ref(&y)).unwrap(), &at);
        let rhs = eval(&w.apply(&[x, y]).unwrap(), &at);
        assert!(close(&lhs, &rhs, 1e-12));
    }
}

#[test]
fn lie_derivative_examples() {
    let g = ATensorField::new(2, 2, vec![p("r"), p("c"), p("c"), Expr::Real(2.0)]).unwrap();
    let lg = lie_derivative(&AVectorField::coord(2, 0), &g).unwrap();
    assert!(lg.comps().iter().all(Expr::is_zero));

    let du_form = AFormField::new(2, 1, [(vec![0], Expr::one())]).unwrap();
    let x = vf(&["u", "0"]);
    let got = lie_derivative_form(&x, &du_form).unwrap();
    assert_eq!(got, du_form);
    assert_eq!(cartan(&x, &du_form).unwrap(), du_form);
}

// Checks the component formula against X(T(Y…)) − Σ T(…,[X,Y_m],…).
#[test]
fn lie_derivative_matches_defining_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for order in 1..=2 {
        for _ in 0..10 {
            let n = 3;
            let t = ATensorField::from_fn(n, order, |_| smooth_expr(&mut rng, n, 2));
            let x = random_vf(&mut rng, n, 2);
            let ys: Vec<_> = (0..order).map(|_| random_vf(&mut rng, n, 2)).collect();
            let lhs = lie_derivative(&x, &t).unwrap().apply(&ys).unwrap();
            let mut rhs = x.apply(&t.apply(&ys).unwrap());
            for m in 0..order {
                let mut moved = ys.clone();
                moved[m] = lie_bracket(&x, &ys[m]).unwrap();
                rhs = opvg_core::exprdsl::sub(rhs, t.apply(&moved).unwrap());
            }
            let at = point(&mut rng, n);
            assert!(close(&eval(&lhs, &at), &eval(&rhs, &at), 1e-9));
        }
    }
}

#[test]
fn cartan_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..=3 {
        for _ in 0..8 {
            let w = random_form(&mut rng, 3, k, 2);
            let x = random_vf(&mut rng, 3, 2);
            let lie = lie_derivative_form(&x, &w).unwrap();
            let via_cartan = cartan(&x, &w).unwrap();
            let at = point(&mut rng, 3);
            assert!(forms_close(&lie, &via_cartan, &at, 1e-9), "degree {k}");
        }
    }
}

#[test]
fn tensor_application_is_function_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let t = ATensorField::from_fn(3, 2, |_| smooth_expr(&mut rng, 3, 2));
        let (y1, y2) = (random_vf(&mut rng, 3, 2), random_vf(&mut rng, 3, 2));
        let f = smooth_expr(&mut rng, 3, 2);
        let at = point(&mut rng, 3);
        let base = eval(&t.apply(&[y1.clone(), y2.clone()]).unwrap(), &at);
        let fv = eval(&f, &at);
        for slot in 0..2 {
            let mut ys = vec![y1.clone(), y2.clone()];
            ys[slot] = ys[slot].scale(&f);
            let got = eval(&t.apply(&ys).unwrap(), &at);
            assert!(close(&got, &(&fv * &base), 1e-10));
        }
        // additivity in one slot
        let sum = t.apply(&[y1.add(&y2).unwrap(), y2.clone()]).unwrap();
        let parts = &eval(&t.apply(&[y1.clone(), y2.clone()]).unwrap(), &at) + &eval(&t.apply(&[y2.clone(), y2.clone()]).unwrap(), &at);
        assert!(close(&eval(&sum, &at), &parts, 1e-10));
    }
}

#[test]
fn forms_evaluate_to_multivectors() {
    let w = AFormField::new(3, 2, [(vec![0, 2], p("c*u"))]).unwrap();
    let c = constants();
    let mv = w.eval(&ctx(&AT, &c)).unwrap();
    assert_eq!(mv.degree(), 2);
    let want = AElem::new(c["c"].values().iter().map(|z| z * Complex64::new(AT[0], 0.0)).collect());
    assert_eq!(mv.get(&[0, 2]), want);
}
