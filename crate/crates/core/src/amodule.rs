//! Linear algebra over `A` on free finite-rank modules: matrices with algebra
//! entries, cofactor determinants, inverses, inner products, reciprocal bases
//! and the signature element.

use num_complex::Complex64;
use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AElem, AlgebraError, EPS_SA};

/// Cofactor expansion stops being sensible beyond this size.
pub const MAX_DET_DIM: usize = 6;

/// Residual tolerance used for reciprocal-basis and inverse checks.
pub const EPS_LIN: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension {0} exceeds the cofactor limit {MAX_DET_DIM}")]
    DimTooLarge(usize),
    #[error("singular matrix: determinant vanishes at fiber {fiber}")]
    SingularMatrix { fiber: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("gram matrix is not Hermitian at ({row},{col}), fiber {fiber}")]
    NotHermitian { row: usize, col: usize, fiber: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Dense row-major matrix with entries in `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct AMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<AElem>,
}

impl AMatrix {
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<AElem>) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        assert_eq!(entries.len(), rows * cols, "entry count does not match shape");
        let fibers = entries[0].fibers();
        assert!(entries.iter().all(|e| e.fibers() == fibers), "mixed fiber counts");
        Self { rows, cols, entries }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> AElem) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self::from_entries(rows, cols, entries)
    }

    pub fn identity(n: usize, fibers: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { AElem::one(fibers) } else { AElem::zero(fibers) })
    }

    pub fn diagonal(diag: &[AElem]) -> Self {
        let fibers = diag[0].fibers();
        Self::from_fn(diag.len(), diag.len(), |i, j| {
            if i == j {
                diag[i].clone()
            } else {
                AElem::zero(fibers)
            }
        })
    }

    /// Builds the matrix whose fiber `f` is `per_fiber[f]` (each row-major, `rows x cols`).
    pub fn from_fibers(rows: usize, cols: usize, per_fiber: &[Vec<Complex64>]) -> Self {
        Self::from_fn(rows, cols, |i, j| AElem::from_fn(per_fiber.len(), |f| per_fiber[f][i * cols + j]))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn fibers(&self) -> usize {
        self.entries[0].fibers()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &AElem {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: AElem) {
        assert_eq!(value.fibers(), self.fibers());
        self.entries[i * self.cols + j] = value;
    }

    pub fn entries(&self) -> &[AElem] {
        &self.entries
    }

    /// The scalar matrix seen by one fiber, row-major.
    pub fn fiber(&self, f: usize) -> Vec<Complex64> {
        self.entries.iter().map(|e| e.get(f)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// `(M*)^t`, entrywise involution followed by transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimMismatch { expected: self.cols, got: other.rows });
        }
        let fibers = self.fibers();
        Ok(Self::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = AElem::zero(fibers);
            for k in 0..self.cols {
                acc += &(self.get(i, k) * other.get(k, j));
            }
            acc
        }))
    }

    pub fn apply(&self, v: &[AElem]) -> Result<Vec<AElem>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimMismatch { expected: self.cols, got: v.len() });
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = AElem::zero(self.fibers());
                for (j, vj) in v.iter().enumerate() {
                    acc += &(self.get(i, j) * vj);
                }
                acc
            })
            .collect())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries.iter().zip(&other.entries).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }

    fn require_square(&self) -> Result<usize, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        if self.rows > MAX_DET_DIM {
            return Err(LinalgError::DimTooLarge(self.rows));
        }
        Ok(self.rows)
    }

    /// Determinant of the submatrix picked out by `rows` and `cols` (equal lengths).
    /// The empty minor is `1`.
    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> AElem {
        assert_eq!(rows.len(), cols.len());
        match rows.len() {
            0 => AElem::one(self.fibers()),
            1 => self.get(rows[0], cols[0]).clone(),
            2 => {
                self.get(rows[0], cols[0]) * self.get(rows[1], cols[1])
                    - self.get(rows[0], cols[1]) * self.get(rows[1], cols[0])
            }
            _ => {
                // expand along the first listed row
                let mut acc = AElem::zero(self.fibers());
                let rest_rows = &rows[1..];
                let mut rest_cols = Vec::with_capacity(cols.len() - 1);
                for (k, &c) in cols.iter().enumerate() {
                    let entry = self.get(rows[0], c);
                    if entry.norm() == 0.0 {
                        continue;
                    }
                    rest_cols.clear();
                    rest_cols.extend(cols.iter().enumerate().filter(|&(m, _)| m != k).map(|(_, &c)| c));
                    let term = entry * &self.minor(rest_rows, &rest_cols);
                    if k % 2 == 0 {
                        acc += &term;
                    } else {
                        acc -= &term;
                    }
                }
                acc
            }
        }
    }

    pub fn det(&self) -> Result<AElem, LinalgError> {
        let n = self.require_square()?;
        let idx: Vec<usize> = (0..n).collect();
        Ok(self.minor(&idx, &idx))
    }

    /// Transposed cofactor matrix.
    pub fn adjugate(&self) -> Result<Self, LinalgError> {
        let n = self.require_square()?;
        if n == 1 {
            return Ok(Self::identity(1, self.fibers()));
        }
        Ok(Self::from_fn(n, n, |i, j| {
            // entry (i, j) of adj is the (j, i) cofactor
            let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
            let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
            let m = self.minor(&rows, &cols);
            if (i + j) % 2 == 0 {
                m
            } else {
                -m
            }
        }))
    }

    pub fn inverse(&self) -> Result<Self, LinalgError> {
        let det = self.det()?;
        let inv_det = det.inv().map_err(|e| match e {
            AlgebraError::NotInvertible { fiber, .. } => LinalgError::SingularMatrix { fiber },
            other => other.into(),
        })?;
        let adj = self.adjugate()?;
        Ok(Self::from_fn(self.rows, self.cols, |i, j| adj.get(i, j) * &inv_det))
    }
}

impl Serialize for AMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<&[AElem]> = self.entries.chunks(self.cols).collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let rows: Vec<Vec<AElem>> = Vec::deserialize(deserializer)?;
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(D::Error::custom("matrix rows must be nonempty and of equal length"));
        }
        let entries: Vec<AElem> = rows.into_iter().flatten().collect();
        let fibers = entries[0].fibers();
        if entries.iter().any(|e| e.fibers() != fibers) {
            return Err(D::Error::custom("matrix entries have different fiber counts"));
        }
        Ok(AMatrix::from_entries(r, c, entries))
    }
}

/// A free module `A^n` with an `A`-valued inner product given by its Gram
/// matrix in a fixed basis. Linear in the first slot, conjugate-linear in the
/// second.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerProductSpace {
    gram: AMatrix,
    det: AElem,
}

impl InnerProductSpace {
    /// Accepts any Hermitian, nondegenerate Gram matrix.
    pub fn new(gram: AMatrix) -> Result<Self, LinalgError> {
        let n = gram.require_square()?;
        for i in 0..n {
            for j in 0..=i {
                let a = gram.get(i, j);
                let b = gram.get(j, i).conj();
                for f in 0..gram.fibers() {
                    let scale = a.get(f).norm().max(1.0);
                    if (a.get(f) - b.get(f)).norm() > EPS_SA * scale {
                        return Err(LinalgError::NotHermitian { row: i, col: j, fiber: f });
                    }
                }
            }
        }
        let det = gram.det()?;
        if let Err(AlgebraError::NotInvertible { fiber, .. }) = det.inv() {
            return Err(LinalgError::SingularMatrix { fiber });
        }
        Ok(Self { gram, det })
    }

    /// Additionally requires every Gram entry to be self-adjoint, i.e. the
    /// inner product is compatible with the natural involution.
    pub fn compatible(gram: AMatrix) -> Result<Self, LinalgError> {
        for e in gram.entries() {
            e.require_self_adjoint()?;
        }
        Self::new(gram)
    }

    pub fn dim(&self) -> usize {
        self.gram.rows()
    }

    pub fn fibers(&self) -> usize {
        self.gram.fibers()
    }

    pub fn gram(&self) -> &AMatrix {
        &self.gram
    }

    /// `g = det(g_ij)`.
    pub fn det(&self) -> &AElem {
        &self.det
    }

    /// `<x, y> = sum_ij x_i y_j^* g_ij`.
    pub fn ip_eval(&self, x: &[AElem], y: &[AElem]) -> Result<AElem, LinalgError> {
        let n = self.dim();
        for v in [x, y] {
            if v.len() != n {
                return Err(LinalgError::DimMismatch { expected: n, got: v.len() });
            }
        }
        let mut acc = AElem::zero(self.fibers());
        for i in 0..n {
            for j in 0..n {
                acc += &(&(&x[i] * &y[j].conj()) * self.gram.get(i, j));
            }
        }
        Ok(acc)
    }

    /// Row `i` holds the coefficients of `e^i = g^{ij} e_j`.
    pub fn reciprocal_basis(&self) -> Result<AMatrix, LinalgError> {
        self.gram.inverse()
    }

    /// `nu = |g| / g`.
    pub fn signature(&self) -> Result<AElem, LinalgError> {
        signature_of_det(&self.det)
    }

    /// When the determinant vanishes at some fiber, returns that fiber and a
    /// nonzero coefficient vector `x`, supported on the fiber, with
    /// `<e_i, x> = 0` for all `i`.
    pub fn degeneracy_witness(gram: &AMatrix) -> Result<Option<(usize, Vec<AElem>)>, LinalgError> {
        let n = gram.require_square()?;
        let det = gram.det()?;
        let Err(AlgebraError::NotInvertible { fiber, .. }) = det.inv() else {
            return Ok(None);
        };
        let m = nalgebra::DMatrix::from_row_slice(n, n, &gram.fiber(fiber));
        let svd = m.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        // smallest singular value's right vector spans the kernel of G; <e_i, x> = (G x*)_i
        let (k, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
        let kernel: Vec<Complex64> = (0..n).map(|j| v_t[(k, j)].conj()).collect();
        let fibers = gram.fibers();
        let x = (0..n)
            .map(|j| AElem::from_fn(fibers, |f| if f == fiber { kernel[j].conj() } else { Complex64::new(0.0, 0.0) }))
            .collect();
        Ok(Some((fiber, x)))
    }
}

/// `nu = |g| / g` for a self-adjoint invertible determinant.
pub fn signature_of_det(det: &AElem) -> Result<AElem, LinalgError> {
    det.require_self_adjoint()?;
    let abs = det.abs()?;
    abs.try_div(det).map_err(|e| match e {
        AlgebraError::NotInvertible { fiber, .. } => LinalgError::SingularMatrix { fiber },
        other => other.into(),
    })
}
