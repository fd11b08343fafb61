//! Vector fields, covariant tensor fields and differential forms with
//! `A`-valued coefficients on a single chart.
//!
//! Components are expressions in the chart coordinates. A vector field is
//! `Σ X^i ∂_i`, a k-form is `Σ_I ω_I dx^I` over strictly increasing `I`.
//! Forms act on vector fields by the determinant convention
//! `dx^{i_1}∧…∧dx^{i_k}(Y_1,…,Y_k) = det[Y_b^{i_a}]`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::algebra::AElem;
use crate::exprdsl::{add, mul, neg, sub, EvalContext, EvalError, Expr};
use crate::exterior::{combinations, sort_with_sign, MultiVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("interior product of a 0-form")]
    DegreeZero,
    #[error("invalid component index {0:?}")]
    BadIndex(Vec<usize>),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn check_dim(expected: usize, got: usize) -> Result<(), FieldError> {
    if expected == got {
        Ok(())
    } else {
        Err(FieldError::DimMismatch { expected, got })
    }
}

fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
    terms.into_iter().fold(Expr::zero(), add)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AVectorField {
    comps: Vec<Expr>,
}

impl AVectorField {
    pub fn new(comps: Vec<Expr>) -> Self {
        Self { comps }
    }

    /// The coordinate field `∂_i` on an `n`-dimensional chart.
    pub fn coord(n: usize, i: usize) -> Self {
        Self::new((0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect())
    }

    /// `∂_i ⊗ h`, the simple field with one nonzero component.
    pub fn simple(n: usize, i: usize, h: Expr) -> Self {
        Self::coord(n, i).scale(&h)
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![Expr::zero(); n])
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.comps[i]
    }

    /// `h·X`.
    pub fn scale(&self, h: &Expr) -> Self {
        Self::new(self.comps.iter().map(|c| mul(h.clone(), c.clone())).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self::new(self.comps.iter().zip(&other.comps).map(|(a, b)| add(a.clone(), b.clone())).collect()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self::new(self.comps.iter().zip(&other.comps).map(|(a, b)| sub(a.clone(), b.clone())).collect()))
    }

    pub fn eval(&self, ctx: &EvalContext<'_>) -> Result<Vec<AElem>, FieldError> {
        self.comps.iter().map(|c| Ok(c.eval(ctx)?)).collect()
    }

    /// Applies the field to a function: `Σ X^i ∂_i f`.
    pub fn apply(&self, f: &Expr) -> Expr {
        sum(self.comps.iter().enumerate().map(|(i, x)| mul(x.clone(), f.diff(i))))
    }
}

pub fn apply_vf(x: &AVectorField, f: &Expr, dim: usize) -> Result<Expr, FieldError> {
    check_dim(dim, x.dim())?;
    if let Some(i) = f.max_coord() {
        if i >= dim {
            return Err(FieldError::DimMismatch { expected: dim, got: i + 1 });
        }
    }
    Ok(x.apply(f))
}

/// `[X,Y]^j = Σ_i (X^i ∂_i Y^j − Y^i ∂_i X^j)`.
pub fn lie_bracket(x: &AVectorField, y: &AVectorField) -> Result<AVectorField, FieldError> {
    check_dim(x.dim(), y.dim())?;
    Ok(AVectorField::new((0..x.dim()).map(|j| sub(x.apply(&y.comps[j]), y.apply(&x.comps[j]))).collect()))
}

pub fn involution_field(x: &AVectorField) -> AVectorField {
    AVectorField::new(x.comps.iter().map(Expr::conj).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AFormField {
    dim: usize,
    degree: usize,
    comps: BTreeMap<Vec<usize>, Expr>,
}

impl AFormField {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Self { dim, degree, comps: BTreeMap::new() }
    }

    /// A 0-form.
    pub fn function(dim: usize, f: Expr) -> Self {
        let mut w = Self::zero(dim, 0);
        w.comps.insert(Vec::new(), f);
        w
    }

    /// Builds a form from components keyed by index tuples. Keys need not be
    /// sorted; repeated indices are rejected, and permuted keys accumulate with sign.
    pub fn new(dim: usize, degree: usize, comps: impl IntoIterator<Item = (Vec<usize>, Expr)>) -> Result<Self, FieldError> {
        let mut w = Self::zero(dim, degree);
        for (key, e) in comps {
            if key.len() != degree || key.iter().any(|&i| i >= dim) {
                return Err(FieldError::BadIndex(key));
            }
            let Some((sorted, sign)) = sort_with_sign(&key) else {
                return Err(FieldError::BadIndex(key));
            };
            let e = if sign < 0.0 { neg(e) } else { e };
            w.accumulate(sorted, e);
        }
        Ok(w)
    }

    fn accumulate(&mut self, key: Vec<usize>, e: Expr) {
        let cur = self.comps.remove(&key).unwrap_or_else(Expr::zero);
        let next = add(cur, e);
        if !next.is_zero() {
            self.comps.insert(key, next);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn comps(&self) -> &BTreeMap<Vec<usize>, Expr> {
        &self.comps
    }

    /// Component at a strictly increasing key; zero when absent.
    pub fn component(&self, key: &[usize]) -> Expr {
        self.comps.get(key).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn scale(&self, h: &Expr) -> Self {
        let mut w = Self::zero(self.dim, self.degree);
        for (k, e) in &self.comps {
            w.accumulate(k.clone(), mul(h.clone(), e.clone()));
        }
        w
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        check_dim(self.dim, other.dim)?;
        check_dim(self.degree, other.degree)?;
        let mut w = self.clone();
        for (k, e) in &other.comps {
            w.accumulate(k.clone(), e.clone());
        }
        Ok(w)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.add(&other.scale(&Expr::Real(-1.0)))
    }

    pub fn wedge(&self, other: &Self) -> Result<Self, FieldError> {
        check_dim(self.dim, other.dim)?;
        let degree = self.degree + other.degree;
        let mut w = Self::zero(self.dim, degree);
        if degree > self.dim {
            return Ok(w);
        }
        for (i, a) in &self.comps {
            for (j, b) in &other.comps {
                let key: Vec<usize> = i.iter().chain(j).copied().collect();
                if let Some((sorted, sign)) = sort_with_sign(&key) {
                    let e = mul(a.clone(), b.clone());
                    w.accumulate(sorted, if sign < 0.0 { neg(e) } else { e });
                }
            }
        }
        Ok(w)
    }

    /// Coefficients at a point, in the `dx^I` basis.
    pub fn eval(&self, ctx: &EvalContext<'_>) -> Result<MultiVector, FieldError> {
        let mut mv = MultiVector::zero(self.dim, self.degree, ctx.fibers);
        for (k, e) in &self.comps {
            mv.set(k.clone(), e.eval(ctx)?);
        }
        Ok(mv)
    }

    /// `ω(Y_1,…,Y_k)` as an expression.
    pub fn apply(&self, ys: &[AVectorField]) -> Result<Expr, FieldError> {
        check_dim(self.degree, ys.len())?;
        for y in ys {
            check_dim(self.dim, y.dim())?;
        }
        let t = ATensorField::from_form(self);
        t.apply(ys)
    }
}

pub fn involution_form(w: &AFormField) -> AFormField {
    AFormField { dim: w.dim, degree: w.degree, comps: w.comps.iter().map(|(k, e)| (k.clone(), e.conj())).collect() }
}

/// Exterior derivative `dω = Σ_I Σ_i ∂_i ω_I dx^i∧dx^I`.
pub fn d(w: &AFormField) -> AFormField {
    let mut out = AFormField::zero(w.dim, w.degree + 1);
    if w.degree >= w.dim {
        return out;
    }
    for (key, e) in &w.comps {
        for i in 0..w.dim {
            let mut full = Vec::with_capacity(key.len() + 1);
            full.push(i);
            full.extend_from_slice(key);
            if let Some((sorted, sign)) = sort_with_sign(&full) {
                let de = e.diff(i);
                if !de.is_zero() {
                    out.accumulate(sorted, if sign < 0.0 { neg(de) } else { de });
                }
            }
        }
    }
    out
}

/// `i_X ω`, contracting the first slot.
pub fn interior(x: &AVectorField, w: &AFormField) -> Result<AFormField, FieldError> {
    if w.degree == 0 {
        return Err(FieldError::DegreeZero);
    }
    check_dim(w.dim, x.dim())?;
    let mut out = AFormField::zero(w.dim, w.degree - 1);
    for (key, e) in &w.comps {
        for (pos, &j) in key.iter().enumerate() {
            let rest: Vec<usize> = key.iter().enumerate().filter(|&(p, _)| p != pos).map(|(_, &i)| i).collect();
            let term = mul(x.comps[j].clone(), e.clone());
            out.accumulate(rest, if pos % 2 == 1 { neg(term) } else { term });
        }
    }
    Ok(out)
}

/// Covariant tensor field of order `k`, stored densely in row-major index order.
#[derive(Debug, Clone, PartialEq)]
pub struct ATensorField {
    dim: usize,
    order: usize,
    comps: Vec<Expr>,
}

impl ATensorField {
    pub fn new(dim: usize, order: usize, comps: Vec<Expr>) -> Result<Self, FieldError> {
        check_dim(dim.pow(order as u32), comps.len())?;
        Ok(Self { dim, order, comps })
    }

    pub fn from_fn(dim: usize, order: usize, mut f: impl FnMut(&[usize]) -> Expr) -> Self {
        let comps = multi_indices(dim, order).iter().map(|i| f(i)).collect();
        Self { dim, order, comps }
    }

    /// The alternating tensor of a form: `T_{σ(I)} = sgn(σ) ω_I`.
    pub fn from_form(w: &AFormField) -> Self {
        Self::from_fn(w.dim, w.degree, |idx| match sort_with_sign(idx) {
            Some((sorted, sign)) => {
                let e = w.component(&sorted);
                if sign < 0.0 {
                    neg(e)
                } else {
                    e
                }
            }
            None => Expr::zero(),
        })
    }

    /// Reads the strictly increasing components as a form. Only meaningful for
    /// alternating tensors.
    pub fn to_form(&self) -> AFormField {
        let mut w = AFormField::zero(self.dim, self.order);
        for key in combinations(self.dim, self.order) {
            let e = self.component(&key).clone();
            if !e.is_zero() {
                w.comps.insert(key, e);
            }
        }
        w
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn component(&self, idx: &[usize]) -> &Expr {
        &self.comps[self.offset(idx)]
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    /// `T(Y_1,…,Y_k) = Σ T_{i_1…i_k} Y_1^{i_1}⋯Y_k^{i_k}`.
    pub fn apply(&self, ys: &[AVectorField]) -> Result<Expr, FieldError> {
        check_dim(self.order, ys.len())?;
        for y in ys {
            check_dim(self.dim, y.dim())?;
        }
        Ok(sum(multi_indices(self.dim, self.order).iter().map(|idx| {
            idx.iter().zip(ys).fold(self.component(idx).clone(), |acc, (&i, y)| mul(acc, y.comps[i].clone()))
        })))
    }

    pub fn eval(&self, ctx: &EvalContext<'_>) -> Result<Vec<AElem>, FieldError> {
        self.comps.iter().map(|c| Ok(c.eval(ctx)?)).collect()
    }
}

/// All `k`-tuples over `0..n` in row-major order.
pub fn multi_indices(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..n).map(move |i| {
                    let mut q = p.clone();
                    q.push(i);
                    q
                })
            })
            .collect();
    }
    out
}

/// `(L_X T)_I = X(T_I) + Σ_m ∂_{i_m} X^j T_{i_1…j…i_k}`, the component form of
/// `X(T(Y…)) − Σ T(…,[X,Y_m],…)` on coordinate fields.
pub fn lie_derivative(x: &AVectorField, t: &ATensorField) -> Result<ATensorField, FieldError> {
    check_dim(t.dim, x.dim())?;
    Ok(ATensorField::from_fn(t.dim, t.order, |idx| {
        let mut terms = vec![x.apply(t.component(idx))];
        for m in 0..idx.len() {
            for j in 0..t.dim {
                let dx = x.comps[j].diff(idx[m]);
                if dx.is_zero() {
                    continue;
                }
                let mut moved = idx.to_vec();
                moved[m] = j;
                terms.push(mul(dx, t.component(&moved).clone()));
            }
        }
        sum(terms)
    }))
}

pub fn lie_derivative_form(x: &AVectorField, w: &AFormField) -> Result<AFormField, FieldError> {
    Ok(lie_derivative(x, &ATensorField::from_form(w))?.to_form())
}

/// `d(i_X ω) + i_X(dω)`; for a 0-form this is `X(f)`.
pub fn cartan(x: &AVectorField, w: &AFormField) -> Result<AFormField, FieldError> {
    check_dim(w.dim, x.dim())?;
    let second = interior(x, &d(w))?;
    if w.degree == 0 {
        return Ok(second);
    }
    d(&interior(x, w)?).add(&second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprdsl::{parse, Symbols};

    fn p(src: &str) -> Expr {
        parse(src, &Symbols::new(&["u", "v", "w"], &["c"]).unwrap()).unwrap()
    }

    #[test]
    fn form_keys_are_sorted_with_sign() {
        let w = AFormField::new(3, 2, [(vec![2, 0], p("u"))]).unwrap();
        assert_eq!(w.component(&[0, 2]), p("-u"));
        assert!(AFormField::new(3, 2, [(vec![1, 1], p("u"))]).is_err());
        assert!(AFormField::new(3, 2, [(vec![1, 3], p("u"))]).is_err());
    }

    #[test]
    fn interior_signs() {
        let vol = AFormField::new(3, 3, [(vec![0, 1, 2], Expr::one())]).unwrap();
        let i1 = interior(&AVectorField::coord(3, 1), &vol).unwrap();
        assert_eq!(i1.comps().len(), 1);
        assert_eq!(i1.component(&[0, 2]), Expr::Real(-1.0));
    }

    #[test]
    fn multi_index_order() {
        assert_eq!(multi_indices(2, 2), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(multi_indices(3, 0), vec![Vec::<usize>::new()]);
    }
}
