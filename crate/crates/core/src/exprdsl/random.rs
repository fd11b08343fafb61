//! Random expressions for property checks.

use std::sync::Arc;

use rand::Rng;

use super::{Expr, Func};

/// A random expression in `n` coordinates built from sums, products, small
/// nonnegative powers, `sin`, `cos`, `exp` and `conj`, so it is defined
/// everywhere. Leaves are coordinates, the given constants, or literals in [−2, 2).
pub fn smooth_expr(rng: &mut impl Rng, n: usize, constants: &[String], depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        let pick = rng.gen_range(0..4);
        return match pick {
            0 | 1 => Expr::Coord(rng.gen_range(0..n)),
            2 if !constants.is_empty() => Expr::constant(constants[rng.gen_range(0..constants.len())].clone()),
            _ => Expr::Real(rng.gen_range(-2.0..2.0)),
        };
    }
    let sub = |rng: &mut _| Arc::new(smooth_expr(rng, n, constants, depth - 1));
    match rng.gen_range(0..6) {
        0 => Expr::Add(sub(rng), sub(rng)),
        1 => Expr::Sub(sub(rng), sub(rng)),
        2 | 3 => Expr::Mul(sub(rng), sub(rng)),
        4 => Expr::Pow(sub(rng), rng.gen_range(0..=3)),
        _ => {
            let f = [Func::Sin, Func::Cos, Func::Exp, Func::Conj][rng.gen_range(0..4)];
            Expr::Call(f, sub(rng))
        }
    }
}
