//! Expression language for smooth `A`-valued functions on a chart.
//!
//! Expressions are built from chart coordinates, real literals, named algebra
//! constants and a fixed set of elementary functions. They can be parsed,
//! printed, differentiated exactly and evaluated fiber by fiber.

mod diff;
mod eval;
mod parse;
mod print;
pub mod random;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use diff::{add, call, div, mul, neg, pow, sub};
pub use eval::{EvalContext, EvalError};
pub use parse::parse;
pub use print::print;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Conj,
}

impl Func {
    pub const ALL: [Func; 9] =
        [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Log, Func::Sqrt, Func::Sinh, Func::Cosh, Func::Conj];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Conj => "conj",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl fmt::Display for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Expression tree. Children are shared, so cloning is cheap.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Coord(usize),
    Real(f64),
    Const(String),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, i32),
    Call(Func, Arc<Expr>),
}

impl Expr {
    pub fn zero() -> Self {
        Expr::Real(0.0)
    }

    pub fn one() -> Self {
        Expr::Real(1.0)
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Expr::Const(name.into())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Real(x) if *x == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Real(x) if *x == 1.0)
    }

    /// Exact partial derivative with respect to coordinate `coord`.
    pub fn diff(&self, coord: usize) -> Expr {
        diff::diff(self, coord)
    }

    /// Replaces every `Coord(i)` by `subs[i]`.
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        diff::substitute(self, subs)
    }

    /// Applies the involution: `conj(e)`, folded through literals and coordinates.
    pub fn conj(&self) -> Expr {
        call(Func::Conj, self.clone())
    }

    pub fn eval(&self, ctx: &EvalContext<'_>) -> Result<crate::algebra::AElem, EvalError> {
        ctx.eval(self)
    }

    /// Names of all constants referenced by the expression.
    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Const(name) = e {
                out.insert(name.clone());
            }
        });
        out
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_coord(&self) -> Option<usize> {
        let mut best = None;
        self.visit(&mut |e| {
            if let Expr::Coord(i) = e {
                best = Some(best.map_or(*i, |b: usize| b.max(*i)));
            }
        });
        best
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Coord(_) | Expr::Real(_) | Expr::Const(_) => {}
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.visit(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }
}

impl From<f64> for Expr {
    fn from(x: f64) -> Self {
        Expr::Real(x)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown name `{name}` at byte {offset}")]
    UnknownName { name: String, offset: usize },
    #[error("`{name}` at byte {offset} takes {expected} argument(s), got {got}")]
    Arity { name: String, offset: usize, expected: usize, got: usize },
    #[error("name `{0}` is declared in more than one namespace")]
    DuplicateName(String),
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownName { offset, .. }
            | ParseError::Arity { offset, .. } => Some(*offset),
            ParseError::DuplicateName(_) => None,
        }
    }
}

/// The names an expression may use: coordinates (resolved to indices) and
/// algebra constants. Function names are fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbols {
    coords: Vec<String>,
    constants: BTreeSet<String>,
}

impl Symbols {
    pub fn new<S: AsRef<str>>(coords: &[S], constants: &[S]) -> Result<Self, ParseError> {
        let mut seen: BTreeSet<String> = Func::ALL.iter().map(|f| f.name().to_string()).collect();
        let mut out = Self { coords: Vec::new(), constants: BTreeSet::new() };
        for c in coords {
            let c = c.as_ref().to_string();
            if !seen.insert(c.clone()) {
                return Err(ParseError::DuplicateName(c));
            }
            out.coords.push(c);
        }
        for c in constants {
            let c = c.as_ref().to_string();
            if !seen.insert(c.clone()) {
                return Err(ParseError::DuplicateName(c));
            }
            out.constants.insert(c);
        }
        Ok(out)
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn constants(&self) -> &BTreeSet<String> {
        &self.constants
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.constants.contains(name)
    }
}

/// `true` for names accepted in scene documents: `[A-Za-z][A-Za-z0-9_]*`.
pub fn is_valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
