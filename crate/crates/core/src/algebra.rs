//! The scalar algebra `A = C(X)` for a finite set `X` of `N` fibers.
//!
//! Every element is a length-`N` tuple of complex numbers. Arithmetic is
//! componentwise, the involution is componentwise conjugation and the norm is
//! the sup norm over fibers. With `N = 1` this is just the complex numbers, so
//! every construction in the crate specializes to textbook geometry.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative invertibility threshold.
pub const EPS_INV: f64 = 1e-10;
/// Tolerance on imaginary parts for self-adjointness.
pub const EPS_SA: f64 = 1e-10;
/// Negative values above `-EPS_POS` are clamped to zero by positive functional calculus.
pub const EPS_POS: f64 = 1e-12;
/// Functional-calculus tolerance (`sqrt(a)^2 = a`, `nu^2 = 1`).
pub const EPS_FC: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("fiber count mismatch: {left} vs {right}")]
    FiberCountMismatch { left: usize, right: usize },
    #[error("element is not invertible at fiber {fiber} (|value| = {modulus:e})")]
    NotInvertible { fiber: usize, modulus: f64 },
    #[error("element is not positive at fiber {fiber} (value {re:e}{im:+e}i)")]
    NotPositive { fiber: usize, re: f64, im: f64 },
    #[error("element is not self-adjoint at fiber {fiber} (imaginary part {im:e})")]
    NotSelfAdjoint { fiber: usize, im: f64 },
    #[error("invalid algebra spec: {0}")]
    InvalidSpec(String),
}

/// Shape of the algebra: how many points `X` has and, optionally, their names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    pub fibers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl AlgebraSpec {
    pub fn new(fibers: usize) -> Result<Self, AlgebraError> {
        let spec = Self { fibers, labels: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self, AlgebraError> {
        let spec = Self { fibers: labels.len(), labels: Some(labels) };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), AlgebraError> {
        if self.fibers == 0 {
            return Err(AlgebraError::InvalidSpec("fibers must be at least 1".into()));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.fibers {
                return Err(AlgebraError::InvalidSpec(format!(
                    "{} labels for {} fibers",
                    labels.len(),
                    self.fibers
                )));
            }
            for (i, l) in labels.iter().enumerate() {
                if labels[..i].contains(l) {
                    return Err(AlgebraError::InvalidSpec(format!("duplicate fiber label `{l}`")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// An element of `C(X)`.
#[derive(Clone, PartialEq)]
pub struct AElem {
    values: Vec<Complex64>,
}

impl AElem {
    pub fn new(values: Vec<Complex64>) -> Self {
        assert!(!values.is_empty(), "an algebra element needs at least one fiber");
        Self { values }
    }

    pub fn from_reals(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn constant(fibers: usize, value: Complex64) -> Self {
        Self::new(vec![value; fibers])
    }

    pub fn real(fibers: usize, value: f64) -> Self {
        Self::constant(fibers, Complex64::new(value, 0.0))
    }

    pub fn zero(fibers: usize) -> Self {
        Self::real(fibers, 0.0)
    }

    pub fn one(fibers: usize) -> Self {
        Self::real(fibers, 1.0)
    }

    pub fn from_fn(fibers: usize, f: impl FnMut(usize) -> Complex64) -> Self {
        Self::new((0..fibers).map(f).collect())
    }

    #[inline]
    pub fn fibers(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, fiber: usize) -> Complex64 {
        self.values[fiber]
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { values: self.values.iter().map(|&z| f(z)).collect() }
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.fibers(), other.fibers(), "fiber count mismatch");
        Self {
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    fn check_fibers(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.fibers() != other.fibers() {
            return Err(AlgebraError::FiberCountMismatch { left: self.fibers(), right: other.fibers() });
        }
        Ok(())
    }

    /// Checked componentwise arithmetic.
    pub fn arith(&self, other: &Self, op: ArithOp) -> Result<Self, AlgebraError> {
        self.check_fibers(other)?;
        Ok(match op {
            ArithOp::Add => self + other,
            ArithOp::Sub => self - other,
            ArithOp::Mul => self * other,
            ArithOp::Div => self.try_div(other)?,
        })
    }

    pub fn try_div(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_fibers(other)?;
        Ok(self * &other.inv()?)
    }

    /// Multiplicative inverse; fails on the first fiber whose modulus is below
    /// `EPS_INV * max(1, norm)`.
    pub fn inv(&self) -> Result<Self, AlgebraError> {
        let threshold = EPS_INV * self.norm().max(1.0);
        for (fiber, z) in self.values.iter().enumerate() {
            if z.norm() <= threshold {
                return Err(AlgebraError::NotInvertible { fiber, modulus: z.norm() });
            }
        }
        Ok(self.map(|z| z.inv()))
    }

    pub fn is_invertible(&self) -> bool {
        let threshold = EPS_INV * self.norm().max(1.0);
        self.values.iter().all(|z| z.norm() > threshold)
    }

    /// Componentwise conjugation.
    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    /// Sup norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// The distinct fiber values, in first-occurrence order.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = Vec::new();
        for &z in &self.values {
            if !out.contains(&z) {
                out.push(z);
            }
        }
        out
    }

    pub fn is_self_adjoint(&self, eps: f64) -> bool {
        self.values.iter().all(|z| z.im.abs() <= eps * z.norm().max(1.0))
    }

    /// Returns the real parts, failing when an imaginary part exceeds `EPS_SA`.
    pub fn require_self_adjoint(&self) -> Result<Vec<f64>, AlgebraError> {
        self.values
            .iter()
            .enumerate()
            .map(|(fiber, z)| {
                if z.im.abs() > EPS_SA * z.norm().max(1.0) {
                    Err(AlgebraError::NotSelfAdjoint { fiber, im: z.im })
                } else {
                    Ok(z.re)
                }
            })
            .collect()
    }

    pub fn is_positive(&self) -> bool {
        self.positive_parts().is_ok()
    }

    fn positive_parts(&self) -> Result<Vec<f64>, AlgebraError> {
        let scale = self.norm().max(1.0);
        let mut worst: Option<(usize, f64)> = None;
        let mut parts = Vec::with_capacity(self.fibers());
        for (fiber, z) in self.values.iter().enumerate() {
            let badness = (z.im.abs() - EPS_SA * scale).max(0.0) + (-z.re - EPS_POS * scale).max(0.0);
            if badness > 0.0 && worst.map_or(true, |(_, b)| badness > b) {
                worst = Some((fiber, badness));
            }
            parts.push(z.re.max(0.0));
        }
        match worst {
            Some((fiber, _)) => Err(AlgebraError::NotPositive {
                fiber,
                re: self.values[fiber].re,
                im: self.values[fiber].im,
            }),
            None => Ok(parts),
        }
    }

    /// The unique positive square root of a positive element.
    pub fn sqrt_pos(&self) -> Result<Self, AlgebraError> {
        let parts = self.positive_parts()?;
        Ok(Self::from_reals(&parts.iter().map(|x| x.sqrt()).collect::<Vec<_>>()))
    }

    /// `(|a|, a+, a-)` for self-adjoint `a`.
    pub fn abs_parts(&self) -> Result<(Self, Self, Self), AlgebraError> {
        self.require_self_adjoint()?;
        let re = self.map(|z| Complex64::new(z.re, 0.0));
        let abs = (&re * &re).sqrt_pos()?;
        let pos = (&abs + &re).scale_real(0.5);
        let neg = (&abs - &re).scale_real(0.5);
        Ok((abs, pos, neg))
    }

    /// `|a| = sqrt(a^2)` for self-adjoint `a`.
    pub fn abs(&self) -> Result<Self, AlgebraError> {
        Ok(self.abs_parts()?.0)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.map(|z| z * c)
    }

    pub fn powi(&self, k: i32) -> Self {
        self.map(|z| z.powi(k))
    }

    /// Largest componentwise modulus of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.fibers(), other.fibers(), "fiber count mismatch");
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.fibers() == other.fibers() && self.max_abs_diff(other) <= tol
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.norm() <= tol
    }
}

impl fmt::Debug for AElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AElem(")?;
        for (i, z) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if z.im == 0.0 {
                write!(f, "{}", z.re)?;
            } else {
                write!(f, "{}{:+}i", z.re, z.im)?;
            }
        }
        write!(f, ")")
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&AElem> for &AElem {
            type Output = AElem;
            fn $method(self, rhs: &AElem) -> AElem {
                self.zip(rhs, |a, b| a $op b)
            }
        }
        impl $trait<AElem> for AElem {
            type Output = AElem;
            fn $method(self, rhs: AElem) -> AElem {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&AElem> for AElem {
            type Output = AElem;
            fn $method(self, rhs: &AElem) -> AElem {
                (&self).$method(rhs)
            }
        }
        impl $trait<AElem> for &AElem {
            type Output = AElem;
            fn $method(self, rhs: AElem) -> AElem {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

/// Panics on a non-invertible divisor; use [`AElem::try_div`] when that can happen.
impl Div<&AElem> for &AElem {
    type Output = AElem;
    fn div(self, rhs: &AElem) -> AElem {
        self.try_div(rhs).expect("division by a non-invertible algebra element")
    }
}

impl Neg for &AElem {
    type Output = AElem;
    fn neg(self) -> AElem {
        self.map(|z| -z)
    }
}

impl Neg for AElem {
    type Output = AElem;
    fn neg(self) -> AElem {
        -&self
    }
}

impl AddAssign<&AElem> for AElem {
    fn add_assign(&mut self, rhs: &AElem) {
        assert_eq!(self.fibers(), rhs.fibers(), "fiber count mismatch");
        for (a, b) in self.values.iter_mut().zip(&rhs.values) {
            *a += b;
        }
    }
}

impl SubAssign<&AElem> for AElem {
    fn sub_assign(&mut self, rhs: &AElem) {
        assert_eq!(self.fibers(), rhs.fibers(), "fiber count mismatch");
        for (a, b) in self.values.iter_mut().zip(&rhs.values) {
            *a -= b;
        }
    }
}

impl MulAssign<&AElem> for AElem {
    fn mul_assign(&mut self, rhs: &AElem) {
        assert_eq!(self.fibers(), rhs.fibers(), "fiber count mismatch");
        for (a, b) in self.values.iter_mut().zip(&rhs.values) {
            *a *= b;
        }
    }
}

impl Serialize for AElem {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.values.len()))?;
        for z in &self.values {
            // `+ 0.0` folds negative zero so reports never print `-0.0`
            seq.serialize_element(&[z.re + 0.0, z.im + 0.0])?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for AElem {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw: Vec<[f64; 2]> = Vec::deserialize(deserializer)?;
        if raw.is_empty() {
            return Err(de::Error::custom("an algebra element needs at least one fiber"));
        }
        Ok(AElem::new(raw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn componentwise_product_and_unit() {
        let a = AElem::from_reals(&[1.0, 2.0]);
        let b = AElem::from_reals(&[3.0, 4.0]);
        assert_eq!(a.arith(&b, ArithOp::Mul).unwrap(), AElem::from_reals(&[3.0, 8.0]));
        assert_eq!(&a * &AElem::one(2), a);
    }

    #[test]
    fn division_by_zero_fiber_reports_index() {
        let a = AElem::from_reals(&[2.0, 2.0]);
        let b = AElem::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        match a.arith(&b, ArithOp::Div) {
            Err(AlgebraError::NotInvertible { fiber, .. }) => assert_eq!(fiber, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fiber_mismatch_is_an_error() {
        let a = AElem::one(2);
        let b = AElem::one(3);
        assert!(matches!(
            a.arith(&b, ArithOp::Add),
            Err(AlgebraError::FiberCountMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn involution_examples() {
        let a = AElem::new(vec![c(1.0, 2.0), c(3.0, 0.0)]);
        assert_eq!(a.conj(), AElem::new(vec![c(1.0, -2.0), c(3.0, 0.0)]));
        let sa = AElem::from_reals(&[1.5, -2.0]);
        assert_eq!(sa.conj(), sa);
        let lambda = c(0.0, 1.0);
        assert_eq!(AElem::one(2).scale(lambda).conj(), AElem::constant(2, c(0.0, -1.0)));
    }

    #[test]
    fn spectrum_examples() {
        assert_eq!(AElem::from_reals(&[1.0, -1.0, 1.0]).spectrum(), vec![c(1.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(AElem::one(3).spectrum(), vec![c(1.0, 0.0)]);
        let a = AElem::new(vec![c(0.0, 2.0), c(3.0, 0.0)]);
        let s = a.spectrum();
        assert_eq!(s, vec![c(0.0, 2.0), c(3.0, 0.0)]);
        assert!(s.iter().all(|z| z.norm() <= a.norm()));
        assert_eq!(a.norm(), 3.0);
    }

    #[test]
    fn sqrt_examples() {
        assert_eq!(AElem::from_reals(&[4.0, 9.0]).sqrt_pos().unwrap(), AElem::from_reals(&[2.0, 3.0]));
        assert_eq!(AElem::zero(1).sqrt_pos().unwrap(), AElem::zero(1));
        assert!(matches!(
            AElem::from_reals(&[1.0, -1.0]).sqrt_pos(),
            Err(AlgebraError::NotPositive { fiber: 1, .. })
        ));
        // negative dust is clamped
        assert_eq!(AElem::from_reals(&[-1e-14]).sqrt_pos().unwrap(), AElem::zero(1));
        assert!(AElem::new(vec![c(1.0, 0.5)]).sqrt_pos().is_err());
    }

    #[test]
    fn abs_parts_examples() {
        let (abs, pos, neg) = AElem::from_reals(&[-2.0, 3.0]).abs_parts().unwrap();
        assert_eq!(abs, AElem::from_reals(&[2.0, 3.0]));
        assert_eq!(pos, AElem::from_reals(&[0.0, 3.0]));
        assert_eq!(neg, AElem::from_reals(&[2.0, 0.0]));

        let a = AElem::from_reals(&[0.5, 7.0]);
        let (abs, pos, neg) = a.abs_parts().unwrap();
        assert_eq!((abs, pos, neg), (a.clone(), a, AElem::zero(2)));

        let (abs, pos, neg) = AElem::from_reals(&[-1.0, -1.0]).abs_parts().unwrap();
        assert_eq!(abs, AElem::one(2));
        assert_eq!(pos, AElem::zero(2));
        assert_eq!(neg, AElem::one(2));

        assert!(matches!(
            AElem::new(vec![c(1.0, 1.0)]).abs_parts(),
            Err(AlgebraError::NotSelfAdjoint { fiber: 0, .. })
        ));
    }

    #[test]
    fn invertibility_examples() {
        assert!(AElem::from_reals(&[1.0, 2.0]).is_invertible());
        assert!(!AElem::from_reals(&[1.0, 0.0]).is_invertible());
        assert!(AElem::one(4).is_invertible());
    }

    #[test]
    fn spec_validation() {
        assert!(AlgebraSpec::new(0).is_err());
        assert!(AlgebraSpec::with_labels(vec!["a".into(), "a".into()]).is_err());
        let spec = AlgebraSpec::with_labels(vec!["up".into(), "down".into()]).unwrap();
        assert_eq!(spec.fibers, 2);
        let bad = AlgebraSpec { fibers: 3, labels: Some(vec!["x".into()]) };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let a = AElem::new(vec![c(1.0, -0.5), c(0.0, 2.0)]);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[[1.0,-0.5],[0.0,2.0]]");
        let back: AElem = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<AElem>("[]").is_err());
    }

    fn elem(n: usize) -> impl Strategy<Value = AElem> {
        proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), n)
            .prop_map(|v| AElem::new(v.into_iter().map(|(re, im)| c(re, im)).collect()))
    }

    fn real_elem(n: usize) -> impl Strategy<Value = AElem> {
        proptest::collection::vec(-5.0f64..5.0, n).prop_map(|v| AElem::from_reals(&v))
    }

    proptest! {
        #[test]
        fn c_star_identity(a in elem(5)) {
            let lhs = (&a.conj() * &a).norm();
            let rhs = a.norm() * a.norm();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }

        #[test]
        fn involution_is_antimultiplicative(a in elem(4), b in elem(4)) {
            prop_assert_eq!(a.conj().conj(), a.clone());
            prop_assert!((&a * &b).conj().approx_eq(&(&b.conj() * &a.conj()), 1e-12));
            prop_assert!((&a + &b).conj().approx_eq(&(&a.conj() + &b.conj()), 0.0));
        }

        #[test]
        fn self_adjoint_spectrum_is_real(a in real_elem(6)) {
            prop_assert!(a.spectrum().iter().all(|z| z.im == 0.0));
            prop_assert!(a.spectrum().iter().all(|z| z.norm() <= a.norm()));
        }

        #[test]
        fn sqrt_squares_back(v in proptest::collection::vec(0.0f64..100.0, 1..8)) {
            let a = AElem::from_reals(&v);
            let b = a.sqrt_pos().unwrap();
            prop_assert!(b.is_positive());
            prop_assert!((&b * &b).max_abs_diff(&a) <= EPS_FC * a.norm().max(1.0));
        }

        #[test]
        fn abs_is_multiplicative(a in real_elem(5), b in real_elem(5)) {
            let lhs = (&a * &b).abs().unwrap();
            let rhs = &a.abs().unwrap() * &b.abs().unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * lhs.norm().max(1.0));
        }

        #[test]
        fn positive_negative_parts(a in real_elem(6)) {
            let (abs, pos, neg) = a.abs_parts().unwrap();
            prop_assert!((&pos - &neg).max_abs_diff(&a) <= 1e-12);
            prop_assert!((&pos * &neg).norm() <= 1e-12);
            prop_assert!(abs.is_positive() && pos.is_positive() && neg.is_positive());
        }

        #[test]
        fn distinct_unitary_self_adjoint_elements_are_far_apart(
            a in proptest::collection::vec(any::<bool>(), 6),
            b in proptest::collection::vec(any::<bool>(), 6),
        ) {
            let to = |v: &[bool]| AElem::from_reals(&v.iter().map(|&s| if s { 1.0 } else { -1.0 }).collect::<Vec<_>>());
            let (a, b) = (to(&a), to(&b));
            prop_assert!((&a * &a).approx_eq(&AElem::one(6), 0.0));
            if a != b {
                prop_assert!((&a - &b).norm() >= 2.0);
            }
        }
    }
}
