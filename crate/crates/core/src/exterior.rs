//! Exterior powers of a free `A`-module with an inner product: wedge products,
//! the induced inner product on each `Λ^k`, the canonical volume form and the
//! Hodge star.
//!
//! Multivectors are stored by their coefficients on the basis
//! `e_{i1} ∧ ... ∧ e_{ik}` (`i1 < ... < ik`) of the module's fixed basis.
//! Coefficients on the reciprocal basis `e^{i1} ∧ ... ∧ e^{ik}` are converted
//! with [`OrientedSpace::from_reciprocal`] / [`OrientedSpace::to_reciprocal`].

use std::collections::BTreeMap;

use serde::de::Deserializer;
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::algebra::AElem;
use crate::amodule::{signature_of_det, AMatrix, InnerProductSpace, LinalgError};

/// All strictly increasing `k`-tuples drawn from `0..n`, in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Sorts an index list, returning the permutation sign, or `None` on a repeat.
pub fn sort_with_sign(indices: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = indices.to_vec();
    let mut sign = 1.0;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some((v, sign))
    }
}

/// The increasing complement of `idx` in `0..n`.
pub fn complement(n: usize, idx: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !idx.contains(i)).collect()
}

/// A homogeneous element of `Λ^k A^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiVector {
    dim: usize,
    degree: usize,
    fibers: usize,
    coeffs: BTreeMap<Vec<usize>, AElem>,
}

impl MultiVector {
    pub fn zero(dim: usize, degree: usize, fibers: usize) -> Self {
        assert!(degree <= dim, "degree {degree} exceeds dimension {dim}");
        Self { dim, degree, fibers, coeffs: BTreeMap::new() }
    }

    pub fn scalar(dim: usize, value: AElem) -> Self {
        let mut mv = Self::zero(dim, 0, value.fibers());
        mv.coeffs.insert(Vec::new(), value);
        mv
    }

    /// `coeff * e_{i1} ∧ ... ∧ e_{ik}` for an arbitrary (unsorted) index list.
    pub fn basis(dim: usize, indices: &[usize], coeff: AElem) -> Self {
        let mut mv = Self::zero(dim, indices.len(), coeff.fibers());
        if let Some((key, sign)) = sort_with_sign(indices) {
            assert!(key.iter().all(|&i| i < dim), "index out of range");
            mv.coeffs.insert(key, coeff.scale_real(sign));
        }
        mv
    }

    /// A degree-1 element from its coefficient vector.
    pub fn vector(coeffs: &[AElem]) -> Self {
        let mut mv = Self::zero(coeffs.len(), 1, coeffs[0].fibers());
        for (i, c) in coeffs.iter().enumerate() {
            mv.coeffs.insert(vec![i], c.clone());
        }
        mv
    }

    /// Builds from coefficients listed in [`combinations`] order.
    pub fn from_dense(dim: usize, degree: usize, dense: Vec<AElem>) -> Self {
        let keys = combinations(dim, degree);
        assert_eq!(keys.len(), dense.len(), "wrong number of coefficients");
        let fibers = dense[0].fibers();
        Self { dim, degree, fibers, coeffs: keys.into_iter().zip(dense).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn fibers(&self) -> usize {
        self.fibers
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<usize>, AElem> {
        &self.coeffs
    }

    /// Coefficient on a sorted key; zero when absent.
    pub fn get(&self, key: &[usize]) -> AElem {
        self.coeffs.get(key).cloned().unwrap_or_else(|| AElem::zero(self.fibers))
    }

    pub fn set(&mut self, key: Vec<usize>, value: AElem) {
        assert_eq!(key.len(), self.degree);
        assert!(key.windows(2).all(|w| w[0] < w[1]), "keys must be strictly increasing");
        self.coeffs.insert(key, value);
    }

    /// Coefficients in [`combinations`] order, zeros included.
    pub fn dense(&self) -> Vec<AElem> {
        combinations(self.dim, self.degree).iter().map(|k| self.get(k)).collect()
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            let cur = out.get(k);
            out.coeffs.insert(k.clone(), &cur + v);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.add(&other.scale(&AElem::real(other.fibers, -1.0)))
    }

    pub fn scale(&self, a: &AElem) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(k, v)| (k.clone(), v * a)).collect(),
            ..self.clone()
        }
    }

    /// Applies the involution to every coefficient.
    pub fn conj(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(k, v)| (k.clone(), v.conj())).collect(),
            ..self.clone()
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.dim, self.degree), (other.dim, other.degree));
        combinations(self.dim, self.degree)
            .iter()
            .map(|k| self.get(k).max_abs_diff(&other.get(k)))
            .fold(0.0, f64::max)
    }

    fn check_same_shape(&self, other: &Self) -> Result<(), LinalgError> {
        if self.dim != other.dim {
            return Err(LinalgError::DimMismatch { expected: self.dim, got: other.dim });
        }
        if self.degree != other.degree {
            return Err(LinalgError::DimMismatch { expected: self.degree, got: other.degree });
        }
        Ok(())
    }

    pub fn wedge(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.dim != other.dim {
            return Err(LinalgError::DimMismatch { expected: self.dim, got: other.dim });
        }
        let degree = self.degree + other.degree;
        if degree > self.dim {
            // identically zero; the nominal degree is kept for bookkeeping
            return Ok(Self { dim: self.dim, degree, fibers: self.fibers, coeffs: BTreeMap::new() });
        }
        let mut out = Self::zero(self.dim, degree, self.fibers);
        let mut joined = Vec::with_capacity(degree);
        for (ka, va) in &self.coeffs {
            for (kb, vb) in &other.coeffs {
                joined.clear();
                joined.extend_from_slice(ka);
                joined.extend_from_slice(kb);
                if let Some((key, sign)) = sort_with_sign(&joined) {
                    let term = (va * vb).scale_real(sign);
                    let cur = out.get(&key);
                    out.coeffs.insert(key, &cur + &term);
                }
            }
        }
        Ok(out)
    }
}

impl Serialize for MultiVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let coeffs: BTreeMap<String, &AElem> = self.coeffs.iter().map(|(k, v)| (index_key(k), v)).collect();
        let mut s = serializer.serialize_struct("MultiVector", 3)?;
        s.serialize_field("dim", &self.dim)?;
        s.serialize_field("degree", &self.degree)?;
        s.serialize_field("coeffs", &coeffs)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for MultiVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            dim: usize,
            degree: usize,
            coeffs: BTreeMap<String, AElem>,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.degree > raw.dim {
            return Err(D::Error::custom("degree exceeds dimension"));
        }
        let mut fibers = None;
        let mut coeffs = BTreeMap::new();
        for (k, v) in raw.coeffs {
            let key = parse_index_key(&k).map_err(D::Error::custom)?;
            if key.len() != raw.degree || key.iter().any(|&i| i >= raw.dim) || key.windows(2).any(|w| w[0] >= w[1]) {
                return Err(D::Error::custom(format!("bad coefficient key {k}")));
            }
            if *fibers.get_or_insert(v.fibers()) != v.fibers() {
                return Err(D::Error::custom("coefficients have different fiber counts"));
            }
            coeffs.insert(key, v);
        }
        let fibers = fibers.ok_or_else(|| D::Error::custom("at least one coefficient is required"))?;
        Ok(MultiVector { dim: raw.dim, degree: raw.degree, fibers, coeffs })
    }
}

/// `[0,2]`-style key used in JSON documents.
pub fn index_key(idx: &[usize]) -> String {
    let inner: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
    format!("[{}]", inner.join(","))
}

pub fn parse_index_key(s: &str) -> Result<Vec<usize>, String> {
    let t = s.trim();
    let inner = t
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| format!("index key `{s}` must look like [i,j,...]"))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad index `{p}` in key `{s}`")))
        .collect()
}

/// An inner-product module whose fixed basis is declared proper.
#[derive(Debug, Clone)]
pub struct OrientedSpace {
    base: InnerProductSpace,
    inverse: AMatrix,
    nu: AElem,
    sqrt_abs_g: AElem,
}

impl OrientedSpace {
    pub fn new(base: InnerProductSpace) -> Result<Self, LinalgError> {
        let nu = signature_of_det(base.det())?;
        let sqrt_abs_g = (&nu * base.det()).sqrt_pos()?;
        let inverse = base.reciprocal_basis()?;
        Ok(Self { base, inverse, nu, sqrt_abs_g })
    }

    pub fn from_gram(gram: AMatrix) -> Result<Self, LinalgError> {
        Self::new(InnerProductSpace::new(gram)?)
    }

    pub fn base(&self) -> &InnerProductSpace {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn fibers(&self) -> usize {
        self.base.fibers()
    }

    pub fn nu(&self) -> &AElem {
        &self.nu
    }

    pub fn sqrt_abs_g(&self) -> &AElem {
        &self.sqrt_abs_g
    }

    /// Gram matrix of `{e_I}` in `Λ^k`, entries `det(<e_{i_a}, e_{j_b}>)`.
    pub fn gram_k(&self, k: usize) -> AMatrix {
        let keys = combinations(self.dim(), k);
        let g = self.base.gram();
        AMatrix::from_fn(keys.len(), keys.len(), |a, b| g.minor(&keys[a], &keys[b]))
    }

    /// Induced inner product on `Λ^k`.
    pub fn inner(&self, a: &MultiVector, b: &MultiVector) -> Result<AElem, LinalgError> {
        self.check(a)?;
        a.check_same_shape(b)?;
        let g = self.base.gram();
        let mut acc = AElem::zero(self.fibers());
        for (ka, va) in &a.coeffs {
            for (kb, vb) in &b.coeffs {
                acc += &(&(va * &vb.conj()) * &g.minor(ka, kb));
            }
        }
        Ok(acc)
    }

    /// Converts coefficients on the reciprocal basis `{e^I}` to the `{e_I}` basis.
    pub fn from_reciprocal(&self, rec: &MultiVector) -> Result<MultiVector, LinalgError> {
        self.check(rec)?;
        Ok(change_basis(rec, &self.inverse))
    }

    /// Coefficients of `mv` on the reciprocal basis `{e^I}`.
    pub fn to_reciprocal(&self, mv: &MultiVector) -> Result<MultiVector, LinalgError> {
        self.check(mv)?;
        Ok(change_basis(mv, self.base.gram()))
    }

    /// `Ω = sqrt|g| e^1 ∧ ... ∧ e^n`, returned on the `{e_I}` basis.
    pub fn volume_form(&self) -> MultiVector {
        let n = self.dim();
        let top: Vec<usize> = (0..n).collect();
        let rec = MultiVector::basis(n, &top, self.sqrt_abs_g.clone());
        change_basis(&rec, &self.inverse)
    }

    /// The conjugate-linear Hodge star: the unique `⋆β ∈ Λ^{n-k}` with
    /// `<α, ⋆β> = ν <β ∧ α, Ω>` for every `α ∈ Λ^{n-k}`.
    pub fn hodge(&self, beta: &MultiVector) -> Result<MultiVector, LinalgError> {
        self.check(beta)?;
        let n = self.dim();
        let m = n - beta.degree();
        let keys = combinations(n, m);
        let omega = self.volume_form();
        let fibers = self.fibers();
        let mut rhs = Vec::with_capacity(keys.len());
        for key in &keys {
            let alpha = MultiVector::basis(n, key, AElem::one(fibers));
            let top = beta.wedge(&alpha)?;
            rhs.push(&self.nu * &self.inner(&top, &omega)?);
        }
        // G_m conj(s) = rhs
        let gm = self.gram_k(m);
        let conj_s = gm.inverse()?.apply(&rhs)?;
        Ok(MultiVector::from_dense(n, m, conj_s.iter().map(AElem::conj).collect()))
    }

    fn check(&self, mv: &MultiVector) -> Result<(), LinalgError> {
        if mv.dim() != self.dim() {
            return Err(LinalgError::DimMismatch { expected: self.dim(), got: mv.dim() });
        }
        if mv.fibers() != self.fibers() {
            return Err(crate::algebra::AlgebraError::FiberCountMismatch { left: self.fibers(), right: mv.fibers() }.into());
        }
        Ok(())
    }
}

/// Largest residuals of the Hodge identities for a pair of `k`-vectors:
/// `⋆⋆α − (−1)^{k(n−k)} να`, `α∧⋆β − ν<α,β>Ω` and `<⋆α,⋆β> − ν<α,β>*`.
pub fn hodge_pair_residuals(space: &OrientedSpace, a: &MultiVector, b: &MultiVector) -> Result<[f64; 3], LinalgError> {
    let (n, k) = (space.dim(), a.degree());
    let nu = space.nu();
    let sign = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
    let sa = space.hodge(a)?;
    let sb = space.hodge(b)?;
    let star_star = space.hodge(&sa)?.max_abs_diff(&a.scale(&nu.scale_real(sign)));
    let ab = space.inner(a, b)?;
    let wedge = a.wedge(&sb)?.max_abs_diff(&space.volume_form().scale(&(nu * &ab)));
    let inner = space.inner(&sa, &sb)?.max_abs_diff(&(nu * &ab.conj()));
    Ok([star_star, wedge, inner])
}

/// Residuals of `<Ω,Ω> = ν`, `⋆1 = νΩ` and `⋆Ω = 1`.
pub fn volume_residuals(space: &OrientedSpace) -> Result<[f64; 3], LinalgError> {
    let n = space.dim();
    let f = space.fibers();
    let om = space.volume_form();
    let nu = space.nu();
    let norm = space.inner(&om, &om)?.max_abs_diff(nu);
    let star_one = space.hodge(&MultiVector::scalar(n, AElem::one(f)))?.max_abs_diff(&om.scale(nu));
    let star_om = space.hodge(&om)?.max_abs_diff(&MultiVector::scalar(n, AElem::one(f)));
    Ok([norm, star_one, star_om])
}

/// If `f_i = sum_j m_ij h_j`, rewrites coefficients on `{f_I}` as coefficients on `{h_J}`.
fn change_basis(mv: &MultiVector, m: &AMatrix) -> MultiVector {
    let keys = combinations(mv.dim(), mv.degree());
    let mut out = MultiVector::zero(mv.dim(), mv.degree(), mv.fibers());
    for kj in &keys {
        let mut acc = AElem::zero(mv.fibers());
        for (ki, c) in &mv.coeffs {
            acc += &(c * &m.minor(ki, kj));
        }
        out.coeffs.insert(kj.clone(), acc);
    }
    out
}
