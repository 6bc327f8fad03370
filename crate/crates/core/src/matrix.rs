//! Dense row-major matrix and the handful of vector kernels the solvers use.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input; meant for
    /// literals in tests and examples.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self { rows: rows.len(), cols, data }
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

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        for (i, &vi) in v.iter().enumerate() {
            self[(i, j)] = vi;
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, x.len())?;
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_len(self.cols, other.rows)?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                axpy(a, other.row(k), out.row_mut(i));
            }
        }
        Ok(out)
    }

    /// Principal submatrix on `idx` (rows and columns in the given order).
    pub fn principal_submatrix(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(idx.len(), idx.len(), |a, b| self[(idx[a], idx[b])])
    }

    /// Drops row and column `k` of a square matrix in place.
    pub fn remove_row_col(&mut self, k: usize) {
        let m = self.rows;
        debug_assert!(self.is_square() && k < m);
        let mut w = 0;
        for i in (0..m).filter(|&i| i != k) {
            for j in (0..m).filter(|&j| j != k) {
                self.data[w] = self.data[i * m + j];
                w += 1;
            }
        }
        self.data.truncate(w);
        self.rows = m - 1;
        self.cols = m - 1;
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        check_len(self.data.len(), other.data.len())?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += shift;
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent accumulators let the compiler vectorize.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    // Scaled to avoid overflow for the huge iterates seen with tiny kernel widths.
    let scale = norm_inf(x);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * libm::sqrt(s)
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn norm1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const FACTOR: f64 = 134_217_729.0; // 2^27 + 1
    let c = FACTOR * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, al * bl - (((p - ah * bh) - al * bh) - ah * bl))
}

/// Dot product evaluated as if in twice the working precision
/// (Ogita–Rump–Oishi `Dot2`, error-free transforms without FMA).
///
/// Gradients at the huge iterates produced by narrow-width Gaussian kernels
/// are sums of terms of size ~1e10 that cancel to O(1); a plain dot product
/// loses most digits there.
pub fn dot_compensated(a: &[f64], b: &[f64]) -> f64 {
    let (hi, lo) = dot_compensated_parts(a, b);
    hi + lo
}

/// Four independent `Dot2` accumulators. A single running sum makes every
/// step wait on the previous `two_sum`; separate lanes overlap.
#[derive(Default)]
struct Dot2Lanes {
    s: [f64; 4],
    c: [f64; 4],
}

impl Dot2Lanes {
    #[inline(always)]
    fn push(&mut self, lane: usize, x: f64, y: f64) {
        let (h, r) = two_prod(x, y);
        let (t, q) = two_sum(self.s[lane], h);
        self.s[lane] = t;
        self.c[lane] += q + r;
    }

    #[inline(always)]
    fn push4(&mut self, x: &[f64], y: &[f64]) {
        for l in 0..4 {
            self.push(l, x[l], y[l]);
        }
    }

    /// Error-free merge of the lane sums; the result is `hi + lo`.
    fn finish(self) -> (f64, f64) {
        let mut hi = 0.0;
        let mut lo = (self.c[0] + self.c[1]) + (self.c[2] + self.c[3]);
        for v in self.s {
            let (t, q) = two_sum(hi, v);
            hi = t;
            lo += q;
        }
        two_sum(hi, lo)
    }
}

/// [`dot_compensated`] before the final rounding: the exact dot product is
/// `hi + lo` up to a relative error of order `u²·cond`.
pub fn dot_compensated_parts(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len().min(b.len());
    let split = n - n % 4;
    let mut acc = Dot2Lanes::default();
    for (x, y) in a[..split].chunks_exact(4).zip(b[..split].chunks_exact(4)) {
        acc.push4(x, y);
    }
    for i in split..n {
        acc.push(i - split, a[i], b[i]);
    }
    acc.finish()
}

/// Accurate `Σ xᵢ(hiᵢ + loᵢ)`, keeping the low parts of both the products
/// and the running sum.
pub fn weighted_sum_compensated(x: &[f64], parts: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for (&xi, (hi, lo)) in x.iter().zip(parts) {
        let (h, r) = two_prod(xi, hi);
        let (t, q) = two_sum(s, h);
        s = t;
        c += q + r + xi * lo;
    }
    s + c
}

/// [`dot_compensated`] over an iterator of left factors.
pub fn sum_compensated_products(a: impl IntoIterator<Item = f64>, b: &[f64]) -> f64 {
    let mut acc = Dot2Lanes::default();
    let mut it = a.into_iter();
    let mut buf = [0.0; 4];
    for chunk in b.chunks(4) {
        let mut k = 0;
        while k < chunk.len() {
            match it.next() {
                Some(v) => {
                    buf[k] = v;
                    k += 1;
                }
                None => break,
            }
        }
        if k == 4 {
            acc.push4(&buf, chunk);
        } else {
            for l in 0..k {
                acc.push(l, buf[l], chunk[l]);
            }
            break;
        }
    }
    let (hi, lo) = acc.finish();
    hi + lo
}

/// Compensated sum (same error-free transform as [`dot_compensated`]).
pub fn sum_compensated(a: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for x in a {
        let (t, q) = two_sum(s, x);
        s = t;
        c += q;
    }
    s + c
}
