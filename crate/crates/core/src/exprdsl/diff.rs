//! Symbolic differentiation and the light simplifier it relies on.
//!
//! The smart constructors fold literal arithmetic and absorb `0` and `1` so that
//! repeated differentiation (curvature needs third partials of the metric)
//! stays small.

use std::sync::Arc;

use super::{Expr, Func};

fn lit(e: &Expr) -> Option<f64> {
    match e {
        Expr::Real(x) => Some(*x),
        _ => None,
    }
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Real(x) => Expr::Real(-x),
        Expr::Neg(inner) => Arc::unwrap_or_clone(inner),
        a => Expr::Neg(Arc::new(a)),
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (lit(&a), lit(&b)) {
        (Some(x), Some(y)) => Expr::Real(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => match b {
            Expr::Neg(inner) => Expr::Sub(Arc::new(a), inner),
            b => Expr::Add(Arc::new(a), Arc::new(b)),
        },
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (lit(&a), lit(&b)) {
        (Some(x), Some(y)) => Expr::Real(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => match b {
            Expr::Neg(inner) => Expr::Add(Arc::new(a), inner),
            b => Expr::Sub(Arc::new(a), Arc::new(b)),
        },
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (lit(&a), lit(&b)) {
        (Some(x), Some(y)) => Expr::Real(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::zero(),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), _) if x == -1.0 => neg(b),
        (_, Some(y)) if y == -1.0 => neg(a),
        _ => match (a, b) {
            (Expr::Neg(x), Expr::Neg(y)) => Expr::Mul(x, y),
            (Expr::Neg(x), b) => neg(Expr::Mul(x, Arc::new(b))),
            (a, Expr::Neg(y)) => neg(Expr::Mul(Arc::new(a), y)),
            (a, b) => Expr::Mul(Arc::new(a), Arc::new(b)),
        },
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (lit(&a), lit(&b)) {
        (Some(x), Some(y)) if y != 0.0 => Expr::Real(x / y),
        (Some(x), _) if x == 0.0 => Expr::zero(),
        (_, Some(y)) if y == 1.0 => a,
        (_, Some(y)) if y == -1.0 => neg(a),
        _ => Expr::Div(Arc::new(a), Arc::new(b)),
    }
}

pub fn pow(base: Expr, k: i32) -> Expr {
    match (k, &base) {
        (0, _) => Expr::one(),
        (1, _) => base,
        (_, Expr::Real(x)) if k > 0 || *x != 0.0 => Expr::Real(x.powi(k)),
        (_, Expr::Pow(inner, j)) => match j.checked_mul(k) {
            Some(jk) => pow(Arc::unwrap_or_clone(inner.clone()), jk),
            None => Expr::Pow(Arc::new(base), k),
        },
        _ => Expr::Pow(Arc::new(base), k),
    }
}

pub fn call(f: Func, a: Expr) -> Expr {
    match (f, a) {
        (Func::Conj, Expr::Real(x)) => Expr::Real(x),
        (Func::Conj, Expr::Coord(i)) => Expr::Coord(i),
        (Func::Conj, Expr::Call(Func::Conj, inner)) => Arc::unwrap_or_clone(inner),
        (Func::Sin | Func::Tan | Func::Sinh, Expr::Real(x)) if x == 0.0 => Expr::zero(),
        (Func::Cos | Func::Cosh | Func::Exp, Expr::Real(x)) if x == 0.0 => Expr::one(),
        (f, a) => Expr::Call(f, Arc::new(a)),
    }
}

pub(super) fn diff(e: &Expr, i: usize) -> Expr {
    match e {
        Expr::Coord(j) => Expr::Real(if *j == i { 1.0 } else { 0.0 }),
        Expr::Real(_) | Expr::Const(_) => Expr::zero(),
        Expr::Neg(a) => neg(diff(a, i)),
        Expr::Add(a, b) => add(diff(a, i), diff(b, i)),
        Expr::Sub(a, b) => sub(diff(a, i), diff(b, i)),
        Expr::Mul(a, b) => {
            let (da, db) = (diff(a, i), diff(b, i));
            add(mul(da, (**b).clone()), mul((**a).clone(), db))
        }
        Expr::Div(a, b) => {
            let (da, db) = (diff(a, i), diff(b, i));
            if db.is_zero() {
                return div(da, (**b).clone());
            }
            // (a' b - a b') / b^2
            div(sub(mul(da, (**b).clone()), mul((**a).clone(), db)), pow((**b).clone(), 2))
        }
        Expr::Pow(a, k) => {
            let da = diff(a, i);
            if da.is_zero() {
                return Expr::zero();
            }
            mul(mul(Expr::Real(*k as f64), pow((**a).clone(), k - 1)), da)
        }
        Expr::Call(f, a) => {
            let da = diff(a, i);
            if da.is_zero() {
                return Expr::zero();
            }
            let a = (**a).clone();
            let outer = match f {
                Func::Sin => call(Func::Cos, a),
                Func::Cos => neg(call(Func::Sin, a)),
                Func::Tan => pow(call(Func::Cos, a), -2),
                Func::Exp => call(Func::Exp, a),
                Func::Log => pow(a, -1),
                Func::Sqrt => mul(Expr::Real(0.5), pow(call(Func::Sqrt, a), -1)),
                Func::Sinh => call(Func::Cosh, a),
                Func::Cosh => call(Func::Sinh, a),
                // coordinates are real, so differentiation commutes with the involution
                Func::Conj => return call(Func::Conj, da),
            };
            mul(outer, da)
        }
    }
}

pub(super) fn substitute(e: &Expr, subs: &[Expr]) -> Expr {
    match e {
        Expr::Coord(j) => subs[*j].clone(),
        Expr::Real(_) | Expr::Const(_) => e.clone(),
        Expr::Neg(a) => neg(substitute(a, subs)),
        Expr::Add(a, b) => add(substitute(a, subs), substitute(b, subs)),
        Expr::Sub(a, b) => sub(substitute(a, subs), substitute(b, subs)),
        Expr::Mul(a, b) => mul(substitute(a, subs), substitute(b, subs)),
        Expr::Div(a, b) => div(substitute(a, subs), substitute(b, subs)),
        Expr::Pow(a, k) => pow(substitute(a, subs), *k),
        Expr::Call(f, a) => call(*f, substitute(a, subs)),
    }
}
