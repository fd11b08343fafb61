use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use super::{Expr, Func};
use crate::algebra::{AElem, EPS_SA};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{func} is undefined at {value} (fiber {fiber})")]
    Domain { func: String, fiber: usize, value: Complex64 },
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("coordinate index {index} out of range for a chart of dimension {dim}")]
    CoordOutOfRange { index: usize, dim: usize },
    #[error("constant `{name}` has {got} fibers, expected {expected}")]
    FiberMismatch { name: String, expected: usize, got: usize },
}

/// A point of the chart together with the constant table.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub coords: &'a [f64],
    pub constants: &'a BTreeMap<String, AElem>,
    pub fibers: usize,
}

impl<'a> EvalContext<'a> {
    pub fn new(coords: &'a [f64], constants: &'a BTreeMap<String, AElem>, fibers: usize) -> Self {
        Self { coords, constants, fibers }
    }

    pub fn with_coords(&self, coords: &'a [f64]) -> Self {
        Self { coords, ..*self }
    }

    pub fn eval(&self, e: &Expr) -> Result<AElem, EvalError> {
        Ok(AElem::new(self.values(e)?))
    }

    fn values(&self, e: &Expr) -> Result<Vec<Complex64>, EvalError> {
        let n = self.fibers;
        Ok(match e {
            Expr::Coord(i) => {
                let x = *self.coords.get(*i).ok_or(EvalError::CoordOutOfRange { index: *i, dim: self.coords.len() })?;
                vec![Complex64::new(x, 0.0); n]
            }
            Expr::Real(x) => vec![Complex64::new(*x, 0.0); n],
            Expr::Const(name) => {
                let c = self.constants.get(name).ok_or_else(|| EvalError::UnknownConstant(name.clone()))?;
                if c.fibers() != n {
                    return Err(EvalError::FiberMismatch { name: name.clone(), expected: n, got: c.fibers() });
                }
                c.values().to_vec()
            }
            Expr::Neg(a) => self.values(a)?.into_iter().map(|z| -z).collect(),
            Expr::Add(a, b) => zip(self.values(a)?, self.values(b)?, |x, y| x + y),
            Expr::Sub(a, b) => zip(self.values(a)?, self.values(b)?, |x, y| x - y),
            Expr::Mul(a, b) => zip(self.values(a)?, self.values(b)?, |x, y| x * y),
            Expr::Div(a, b) => {
                let (x, y) = (self.values(a)?, self.values(b)?);
                if let Some(f) = y.iter().position(|z| *z == Complex64::new(0.0, 0.0)) {
                    return Err(EvalError::Domain { func: "division".into(), fiber: f, value: y[f] });
                }
                zip(x, y, |x, y| x / y)
            }
            Expr::Pow(a, k) => {
                let x = self.values(a)?;
                if *k < 0 {
                    if let Some(f) = x.iter().position(|z| *z == Complex64::new(0.0, 0.0)) {
                        return Err(EvalError::Domain { func: format!("^{k}"), fiber: f, value: x[f] });
                    }
                }
                x.into_iter().map(|z| z.powi(*k)).collect()
            }
            Expr::Call(f, a) => {
                let x = self.values(a)?;
                let mut out = Vec::with_capacity(n);
                for (fiber, z) in x.into_iter().enumerate() {
                    out.push(apply(*f, z).ok_or_else(|| EvalError::Domain { func: f.name().into(), fiber, value: z })?);
                }
                out
            }
        })
    }
}

fn zip(x: Vec<Complex64>, y: Vec<Complex64>, f: impl Fn(Complex64, Complex64) -> Complex64) -> Vec<Complex64> {
    x.into_iter().zip(y).map(|(a, b)| f(a, b)).collect()
}

// sqrt and log take the real branch only: the argument must be real up to EPS_SA,
// nonnegative for sqrt and positive for log.
fn real_arg(z: Complex64) -> Option<f64> {
    (z.im.abs() <= EPS_SA * z.re.abs().max(1.0)).then_some(z.re)
}

fn apply(f: Func, z: Complex64) -> Option<Complex64> {
    Some(match f {
        Func::Sin => z.sin(),
        Func::Cos => z.cos(),
        Func::Tan => z.tan(),
        Func::Exp => z.exp(),
        Func::Sinh => z.sinh(),
        Func::Cosh => z.cosh(),
        Func::Conj => z.conj(),
        Func::Sqrt => {
            let x = real_arg(z).filter(|x| *x >= 0.0)?;
            Complex64::new(x.sqrt(), 0.0)
        }
        Func::Log => {
            let x = real_arg(z).filter(|x| *x > 0.0)?;
            Complex64::new(x.ln(), 0.0)
        }
    })
}
