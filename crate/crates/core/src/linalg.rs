//! Dense vectors and matrices.
//!
//! Everything here is plain row-major `f64` storage. Problem sizes in this
//! crate are small (tens of unknowns, a hundred constraints), so dense loops
//! beat anything cleverer and keep summation order fixed, which the instance
//! generator relies on for bit-identical output.

use std::fmt;
use std::ops::{Deref, Index, IndexMut};

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("matrix shape {rows}x{cols} does not match {len} entries")]
    BadShape { rows: usize, cols: usize, len: usize },
    #[error("dimension must be positive")]
    Empty,
}

/// A dense real vector.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Builds a vector, rejecting NaN and infinite entries.
    pub fn new(entries: Vec<f64>) -> Result<Self, LinalgError> {
        if entries.is_empty() {
            return Err(LinalgError::Empty);
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { index });
        }
        Ok(Self(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self((0..dim).map(f).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Inner product. Panics if the dimensions differ; use [`inner`] for a
    /// checked version.
    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot: dimension mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self - other`
    pub fn sub(&self, other: &Vector) -> Vector {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self + other`
    pub fn add(&self, other: &Vector) -> Vector {
        self.zip_map(other, |a, b| a + b)
    }

    /// `self + alpha * other`
    pub fn add_scaled(&self, alpha: f64, other: &Vector) -> Vector {
        self.zip_map(other, |a, b| a + alpha * b)
    }

    pub fn scale(&self, alpha: f64) -> Vector {
        Vector(self.0.iter().map(|a| alpha * a).collect())
    }

    /// In-place `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Vector) {
        assert_eq!(self.dim(), other.dim(), "axpy: dimension mismatch");
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += alpha * b;
        }
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "distance: dimension mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest absolute componentwise difference.
    pub fn max_abs_diff(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "max_abs_diff: dimension mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn zip_map(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Vector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        Vector(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

/// Checked inner product.
pub fn inner(a: &Vector, b: &Vector) -> Result<f64, LinalgError> {
    if a.dim() != b.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.dot(b))
}

pub fn norm(a: &Vector) -> f64 {
    a.norm()
}

/// A dense row-major matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty);
        }
        if rows * cols != data.len() {
            return Err(LinalgError::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(LinalgError::DimensionMismatch {
                expected: c,
                found: bad.len(),
            });
        }
        Self::new(r, c, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self * x`. Panics on dimension mismatch; see [`Matrix::try_matvec`].
    pub fn matvec(&self, x: &[f64]) -> Vector {
        assert_eq!(self.cols, x.len(), "matvec: dimension mismatch");
        Vector(
            self.data
                .chunks_exact(self.cols)
                .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }

    pub fn try_matvec(&self, x: &Vector) -> Result<Vector, LinalgError> {
        if self.cols != x.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: x.dim(),
            });
        }
        Ok(self.matvec(x))
    }

    /// `selfᵀ * x`
    pub fn matvec_transposed(&self, x: &[f64]) -> Vector {
        assert_eq!(self.rows, x.len(), "matvec_transposed: dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (row, &xi) in self.data.chunks_exact(self.cols).zip(x) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * xi;
            }
        }
        Vector(out)
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        Ok(Matrix::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| self.get(i, k) * other.get(k, j)).sum()
        }))
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks_exact(self.cols).map(<[f64]>::to_vec).collect()
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks_exact(self.cols)).finish()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = LinalgError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Matrix::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

/// Result of [`spectral_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralNorm {
    pub value: f64,
    pub iterations: usize,
    /// `false` when `max_iter` ran out before the relative change fell below
    /// `tol`; `value` is then the best estimate seen.
    pub converged: bool,
}

pub const SPECTRAL_TOL: f64 = 1e-10;
pub const SPECTRAL_MAX_ITER: usize = 10_000;
const SPECTRAL_SEED: u64 = 0x5eed_0f_5eed;

/// Largest singular value of a square matrix by power iteration on `MᵀM`.
///
/// The start vector is drawn from a fixed-seed generator so repeated calls
/// return identical estimates. Iteration stops once the relative change of
/// the estimate drops below `tol`.
pub fn spectral_norm(m: &Matrix, tol: f64, max_iter: usize) -> Result<SpectralNorm, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.cols;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(SPECTRAL_SEED);
    // Strictly positive entries keep the start vector away from any
    // coordinate-aligned null space.
    let mut v = Vector::from_fn(n, |_| 0.5 + unit_f64(rng.next_u64()));
    let nv = v.norm();
    v = v.scale(1.0 / nv);

    let mut estimate = 0.0_f64;
    for it in 1..=max_iter.max(1) {
        let mv = m.matvec(&v);
        let w = m.matvec_transposed(&mv);
        // ‖Mv‖ for unit v is a Rayleigh-quotient lower bound on σ_max; it
        // converges from below so the best estimate is the running max.
        let current = mv.norm();
        let wn = w.norm();
        if wn == 0.0 {
            // v landed in the null space of M; M may still be nonzero.
            if m.data.iter().all(|&a| a == 0.0) {
                return Ok(SpectralNorm {
                    value: 0.0,
                    iterations: it,
                    converged: true,
                });
            }
            v = Vector::from_fn(n, |_| 0.5 + unit_f64(rng.next_u64()));
            let nv = v.norm();
            v = v.scale(1.0 / nv);
            continue;
        }
        let change = (current - estimate).abs();
        estimate = estimate.max(current);
        v = w.scale(1.0 / wn);
        if it > 1 && change <= tol * estimate {
            return Ok(SpectralNorm {
                value: estimate,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(SpectralNorm {
        value: estimate,
        iterations: max_iter,
        converged: false,
    })
}

/// Least squares `min ‖A_P s − f‖` over the columns `cols` of the
/// column-major `a` (`rows` entries per column), by Householder QR.
///
/// Returns `None` when the selected columns are numerically dependent.
fn lstsq_columns(a: &[f64], rows: usize, cols: &[usize], f: &[f64]) -> Option<Vec<f64>> {
    let k = cols.len();
    let mut r: Vec<f64> = Vec::with_capacity(rows * k);
    for &c in cols {
        r.extend_from_slice(&a[c * rows..(c + 1) * rows]);
    }
    let col = |j: usize| j * rows;
    let mut rhs = f.to_vec();
    let scale = cols
        .iter()
        .map(|&c| a[c * rows..(c + 1) * rows].iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    for j in 0..k {
        if j >= rows {
            return None;
        }
        let norm = r[col(j) + j..col(j) + rows].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-12 * scale {
            return None;
        }
        let alpha = if r[col(j) + j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = r[col(j) + j..col(j) + rows].to_vec();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|x| x * x).sum();
        if vn > 0.0 {
            for jj in j..k {
                let c = &mut r[col(jj) + j..col(jj) + rows];
                let t: f64 = 2.0 * v.iter().zip(c.iter()).map(|(a, b)| a * b).sum::<f64>() / vn;
                for (ci, vi) in c.iter_mut().zip(&v) {
                    *ci -= t * vi;
                }
            }
            let t: f64 = 2.0 * v.iter().zip(&rhs[j..]).map(|(a, b)| a * b).sum::<f64>() / vn;
            for (ri, vi) in rhs[j..].iter_mut().zip(&v) {
                *ri -= t * vi;
            }
        }
    }
    let mut s = vec![0.0; k];
    for j in (0..k).rev() {
        let mut acc = rhs[j];
        for jj in j + 1..k {
            acc -= r[col(jj) + j] * s[jj];
        }
        s[j] = acc / r[col(j) + j];
    }
    Some(s)
}

/// Nonnegative least squares `min ‖Ax − f‖` subject to `x ≥ 0`
/// (Lawson–Hanson active set).
///
/// `a` is column-major with `rows` entries per column. Returns `None` if
/// the iteration limit `3·cols` is hit or a subproblem is rank deficient.
pub fn nnls(a: &[f64], rows: usize, f: &[f64]) -> Option<Vec<f64>> {
    if rows == 0 || a.len() % rows != 0 || f.len() != rows {
        return None;
    }
    let ncols = a.len() / rows;
    let column = |j: usize| &a[j * rows..(j + 1) * rows];
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs())) * f.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let tol = 1e-13 * scale.max(f64::MIN_POSITIVE) * rows as f64;
    let mut x = vec![0.0; ncols];
    let mut passive = vec![false; ncols];
    let gradient = |x: &[f64]| -> Vec<f64> {
        let mut resid = f.to_vec();
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (r, aij) in resid.iter_mut().zip(column(j)) {
                    *r -= xj * aij;
                }
            }
        }
        (0..ncols).map(|j| column(j).iter().zip(&resid).map(|(a, r)| a * r).sum()).collect()
    };
    for _ in 0..3 * ncols {
        let w = gradient(&x);
        let entering = (0..ncols)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]))
            .filter(|&j| w[j] > tol);
        let Some(t) = entering else {
            return Some(x);
        };
        passive[t] = true;
        loop {
            let cols: Vec<usize> = (0..ncols).filter(|&j| passive[j]).collect();
            let s = lstsq_columns(a, rows, &cols, f)?;
            if s.iter().all(|&v| v > 0.0) {
                for (&j, &v) in cols.iter().zip(&s) {
                    x[j] = v;
                }
                break;
            }
            let mut step = f64::INFINITY;
            let mut blocking = cols[0];
            for (&j, &v) in cols.iter().zip(&s) {
                if v <= 0.0 {
                    let ratio = x[j] / (x[j] - v);
                    if ratio < step {
                        step = ratio;
                        blocking = j;
                    }
                }
            }
            for (&j, &v) in cols.iter().zip(&s) {
                x[j] += step * (v - x[j]);
                if j == blocking || x[j] <= 0.0 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    None
}

/// Maps a 64-bit word to `[0, 1)` using its top 53 bits.
pub(crate) fn unit_f64(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn inner_products() {
        assert_eq!(inner(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(inner(&v(&[1.0, 2.0]), &v(&[3.0, 4.0])).unwrap(), 11.0);
        assert!(matches!(
            inner(&v(&[1.0]), &v(&[1.0, 2.0])),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn nnls_small() {
        // Columns (1,0), (0,1), (1,1); target (1,-1). Optimum x = (1,0,0).
        let a = [1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let x = nnls(&a, 2, &[1.0, -1.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && x[1] == 0.0 && x[2] == 0.0);
    }

    #[test]
    fn norms() {
        assert_eq!(norm(&v(&[0.0, 0.0, 0.0])), 0.0);
        assert_eq!(norm(&v(&[3.0, 4.0])), 5.0);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            Vector::new(vec![1.0, f64::NAN]),
            Err(LinalgError::NonFinite { index: 1 })
        ));
        assert!(Matrix::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn spectral_norm_trivial_cases() {
        let id = spectral_norm(&Matrix::identity(3), SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        assert!((id.value - 1.0).abs() < 1e-12);
        assert!(id.converged);

        let d = Matrix::diagonal(&[2.0, 0.5]);
        let est = spectral_norm(&d, SPECTRAL_TOL, SPECTRAL_MAX_ITER).unwrap();
        assert!((est.value - 2.0).abs() < 1e-9);

        let zero = Matrix::from_fn(2, 2, |_, _| 0.0);
        assert_eq!(spectral_norm(&zero, 1e-10, 100).unwrap().value, 0.0);

        let rect = Matrix::from_fn(2, 3, |_, _| 1.0);
        assert!(matches!(
            spectral_norm(&rect, 1e-10, 100),
            Err(LinalgError::NotSquare { .. })
        ));
    }

    #[test]
    fn spectral_norm_flags_exhausted_budget() {
        let m = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.999_999]]).unwrap();
        let est = spectral_norm(&m, 1e-16, 3).unwrap();
        assert!(!est.converged);
        assert!(est.value > 0.99 && est.value <= 1.0 + 1e-12);
    }

    #[test]
    fn matvec_and_transpose_agree() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let x = [1.0, -1.0];
        assert_eq!(m.matvec_transposed(&x), m.transpose().matvec(&x));
        assert_eq!(m.matvec(&[1.0, 0.0, 1.0]).as_slice(), &[4.0, 10.0]);
    }

    #[test]
    fn matrix_serde_uses_nested_rows() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "[[1.0,2.0],[3.0,4.0]]");
        let back: Matrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<Matrix>("[[1.0],[2.0,3.0]]").is_err());
    }
}
