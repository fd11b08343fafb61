use std::fmt::Write;

use super::{Expr, Symbols};

// precedence levels, loosest first
const SUM: u8 = 0;
const PRODUCT: u8 = 1;
const UNARY: u8 = 2;
const ATOM: u8 = 4;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => SUM,
        Expr::Mul(..) | Expr::Div(..) => PRODUCT,
        Expr::Neg(_) => UNARY,
        Expr::Pow(..) => 3,
        Expr::Coord(_) | Expr::Const(_) | Expr::Call(..) | Expr::Real(_) => ATOM,
    }
}

/// Renders `e` in the concrete syntax accepted by [`super::parse`].
/// Coordinates are printed by name, so `symbols` must match the parse-time table.
pub fn print(e: &Expr, symbols: &Symbols) -> String {
    let mut out = String::new();
    write_at(&mut out, e, SUM, symbols);
    out
}

fn write_at(out: &mut String, e: &Expr, min: u8, symbols: &Symbols) {
    if level(e) < min {
        out.push('(');
        write_expr(out, e, symbols);
        out.push(')');
    } else {
        write_expr(out, e, symbols);
    }
}

fn write_expr(out: &mut String, e: &Expr, symbols: &Symbols) {
    match e {
        Expr::Coord(i) => match symbols.coords().get(*i) {
            Some(name) => out.push_str(name),
            None => write!(out, "x{i}").unwrap(),
        },
        Expr::Const(name) => out.push_str(name),
        Expr::Real(x) => {
            if x.is_sign_negative() {
                write!(out, "(-{})", -x).unwrap();
            } else {
                write!(out, "{x}").unwrap();
            }
        }
        Expr::Neg(a) => {
            out.push('-');
            if matches!(**a, Expr::Real(_)) {
                write!(out, "(").unwrap();
                write_expr(out, a, symbols);
                out.push(')');
            } else {
                write_at(out, a, UNARY, symbols);
            }
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            write_at(out, a, SUM, symbols);
            out.push_str(if matches!(e, Expr::Add(..)) { " + " } else { " - " });
            write_at(out, b, PRODUCT, symbols);
        }
        Expr::Mul(a, b) | Expr::Div(a, b) => {
            write_at(out, a, PRODUCT, symbols);
            out.push(if matches!(e, Expr::Mul(..)) { '*' } else { '/' });
            write_at(out, b, UNARY, symbols);
        }
        Expr::Pow(a, k) => {
            write_at(out, a, ATOM, symbols);
            write!(out, "^{k}").unwrap();
        }
        Expr::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_at(out, a, SUM, symbols);
            out.push(')');
        }
    }
}
