//! Dense Cholesky factor with the two cheap modifications the active-set
//! sweep needs: a positive rank-one update and deletion of a row/column.
//!
//! Deleting row/column `k` of `M = LLᵀ` keeps the leading block `L₁₁` and the
//! block `L₃₁` below it untouched; only the trailing block changes, and
//!
//! ```text
//! L̂₃₃L̂₃₃ᵀ = L₃₃L₃₃ᵀ + l₃₂l₃₂ᵀ
//! ```
//!
//! is a positive rank-one update, which is numerically stable. Growing a
//! factor by a row/column is deliberately not offered.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::{check_len, Matrix};
use crate::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `LLᵀ = M`.
///
/// Stored row-major with a fixed stride so that deletions only shift data.
/// `index_map[r]` is the caller's index for factor row `r`.
#[derive(Clone, Debug)]
pub struct CholFactor {
    l: Vec<f64>,
    stride: usize,
    dim: usize,
    index_map: Vec<usize>,
}

/// Factors a symmetric positive definite matrix; only the lower triangle is
/// read.
pub fn cholesky(m: &Matrix) -> Result<CholFactor> {
    CholFactor::new(m, (0..m.rows()).collect())
}

impl CholFactor {
    /// Factors `m` and tags row `r` with `index_map[r]`.
    pub fn new(m: &Matrix, index_map: Vec<usize>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.rows(), got: m.cols() });
        }
        let n = m.rows();
        check_len(n, index_map.len())?;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
                let s = m[(i, j)] - crate::matrix::dot(ri, rj);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: s });
                    }
                    l[i * n + i] = libm::sqrt(s);
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Self { l, stride: n, dim: n, index_map })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn index_map(&self) -> &[usize] {
        &self.index_map
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.l[i * self.stride + j]
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.l[i * self.stride..i * self.stride + i + 1]
    }

    /// `L` as a dense matrix.
    pub fn lower(&self) -> Matrix {
        Matrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// `LLᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let d = self.dim;
        Matrix::from_fn(d, d, |i, j| {
            let k = i.min(j) + 1;
            crate::matrix::dot(&self.row(i)[..k], &self.row(j)[..k])
        })
    }

    /// `LLᵀ ← LLᵀ + wwᵀ` in O(m²).
    pub fn rank_one_update(&mut self, w: &[f64]) -> Result<()> {
        check_len(self.dim, w.len())?;
        let mut w = w.to_vec();
        self.update_trailing(0, &mut w);
        Ok(())
    }

    /// Rank-one update of the trailing block starting at row/column `offset`;
    /// `w` has length `dim - offset` and is used as workspace.
    fn update_trailing(&mut self, offset: usize, w: &mut [f64]) {
        let m = self.dim - offset;
        let st = self.stride;
        for j in 0..m {
            let wj = w[j];
            if wj == 0.0 {
                continue;
            }
            let jj = (offset + j) * st + offset + j;
            let ljj = self.l[jj];
            let r = libm::hypot(ljj, wj);
            let c = r / ljj;
            let s = wj / ljj;
            self.l[jj] = r;
            for i in (j + 1)..m {
                let idx = (offset + i) * st + offset + j;
                let lij = (self.l[idx] + s * w[i]) / c;
                self.l[idx] = lij;
                w[i] = c * w[i] - s * lij;
            }
        }
    }

    /// Removes row and column `k` (local index) from the factored matrix.
    ///
    /// Cost is a data shift plus an O((dim − k)²) rank-one update; the
    /// leading block is never refactored.
    pub fn delete_index(&mut self, k: usize) -> Result<()> {
        if k >= self.dim {
            return Err(Error::IndexOutOfRange { index: k, dim: self.dim });
        }
        let st = self.stride;
        let old = self.dim;
        let mut w: Vec<f64> = ((k + 1)..old).map(|i| self.l[i * st + k]).collect();
        for i in (k + 1)..old {
            let (src, dst) = (i * st, (i - 1) * st);
            self.l.copy_within(src..src + k, dst);
            self.l.copy_within(src + k + 1..src + i + 1, dst + k);
        }
        self.dim -= 1;
        self.index_map.remove(k);
        if !w.is_empty() {
            self.update_trailing(k, &mut w);
        }
        Ok(())
    }

    /// Local row of the factor that carries caller index `orig`.
    pub fn position_of(&self, orig: usize) -> Option<usize> {
        self.index_map.iter().position(|&i| i == orig)
    }

    /// Solves `LLᵀx = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        check_len(self.dim, b.len())?;
        let d = self.dim;
        for i in 0..d {
            let row = self.row(i);
            let s = b[i] - crate::matrix::dot(&row[..i], &b[..i]);
            b[i] = s / row[i];
        }
        for i in (0..d).rev() {
            let row = self.row(i);
            let xi = b[i] / row[i];
            b[i] = xi;
            for (bj, lij) in b[..i].iter_mut().zip(&row[..i]) {
                *bj -= lij * xi;
            }
        }
        Ok(())
    }

    /// Solves `LLᵀX = B` for every column of `B`.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        check_len(self.dim, b.rows())?;
        let mut x = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let mut col = b.column(j);
            self.solve_in_place(&mut col)?;
            x.set_column(j, &col);
        }
        Ok(x)
    }

    /// Solves `Mx = b` where this factor is of `M + reg·I` (or any nearby
    /// matrix), correcting with `steps` rounds of iterative refinement whose
    /// residuals use `apply_m(v, out) : out = M v`. Returns the final residual
    /// 2-norm.
    pub fn solve_refined(
        &self,
        apply_m: &impl Fn(&[f64], &mut [f64]),
        b: &[f64],
        x: &mut [f64],
        steps: usize,
    ) -> Result<f64> {
        check_len(self.dim, b.len())?;
        check_len(self.dim, x.len())?;
        x.copy_from_slice(b);
        self.solve_in_place(x)?;
        let mut mx = vec![0.0; self.dim];
        let mut r = vec![0.0; self.dim];
        let residual = |x: &[f64], mx: &mut [f64], r: &mut [f64]| {
            apply_m(x, mx);
            for ((ri, bi), mi) in r.iter_mut().zip(b).zip(mx.iter()) {
                *ri = bi - mi;
            }
            crate::matrix::norm2(r)
        };
        for _ in 0..steps {
            residual(x, &mut mx, &mut r);
            self.solve_in_place(&mut r)?;
            for (xi, di) in x.iter_mut().zip(&r) {
                *xi += di;
            }
        }
        Ok(residual(x, &mut mx, &mut r))
    }
}

/// Result of [`refined_solve`].
#[derive(Clone, Debug)]
pub struct RefinedSolution {
    pub x: Matrix,
    /// `‖B − MX‖_F` with the unregularized `M`.
    pub residual_norm: f64,
}

/// Default diagonal shift: `1e-12 · trace(M)/m`.
pub fn default_regularization(m: &Matrix) -> f64 {
    if m.rows() == 0 {
        0.0
    } else {
        1e-12 * m.trace() / m.rows() as f64
    }
}

/// Factors `M + reg·I`, solves, then applies `refine_steps` refinement
/// corrections whose residuals are formed with the original `M`.
pub fn refined_solve(m: &Matrix, reg: f64, b: &Matrix, refine_steps: usize) -> Result<RefinedSolution> {
    check_len(m.rows(), b.rows())?;
    let mut shifted = m.clone();
    shifted.add_diagonal(reg);
    let f = cholesky(&shifted)?;
    let apply = |v: &[f64], out: &mut [f64]| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = crate::matrix::dot(m.row(i), v);
        }
    };
    let mut x = Matrix::zeros(b.rows(), b.cols());
    let mut res2 = 0.0;
    let mut col = vec![0.0; b.rows()];
    for j in 0..b.cols() {
        let r = f.solve_refined(&apply, &b.column(j), &mut col, refine_steps)?;
        res2 += r * r;
        x.set_column(j, &col);
    }
    Ok(RefinedSolution { x, residual_norm: libm::sqrt(res2) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
        a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
    }

    /// Deterministic SPD test matrix `AᵀA + m·I` from a simple LCG.
    fn spd(m: usize, seed: u64) -> Matrix {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let a = Matrix::from_fn(m, m, |_, _| next());
        let mut s = a.transpose().matmul(&a).unwrap();
        s.add_diagonal(m as f64 * 0.1);
        s
    }

    #[test]
    fn identity_factor() {
        let f = cholesky(&Matrix::identity(3)).unwrap();
        assert_eq!(f.lower(), Matrix::identity(3));
    }

    #[test]
    fn hand_factor() {
        let f = cholesky(&Matrix::from_rows(&[[4.0, 2.0], [2.0, 5.0]])).unwrap();
        assert_eq!(f.lower(), Matrix::from_rows(&[[2.0, 0.0], [1.0, 2.0]]));
    }

    #[test]
    fn indefinite_input_reports_pivot() {
        let m = Matrix::from_rows(&[[1.0, 0.0], [0.0, -1.0]]);
        assert_eq!(cholesky(&m).unwrap_err(), Error::NotPositiveDefinite { pivot: 1, value: -1.0 });
    }

    #[test]
    fn rank_one_update_examples() {
        let mut f = cholesky(&spd(4, 1)).unwrap();
        let before = f.lower();
        f.rank_one_update(&[0.0; 4]).unwrap();
        assert_eq!(f.lower(), before);

        let mut f = cholesky(&Matrix::identity(2)).unwrap();
        f.rank_one_update(&[1.0, 0.0]).unwrap();
        let expect = Matrix::from_rows(&[[libm::sqrt(2.0), 0.0], [0.0, 1.0]]);
        assert!(rel_err(&f.lower(), &expect) < 1e-15);
        assert!(f.rank_one_update(&[1.0]).is_err());
    }

    #[test]
    fn delete_examples() {
        let mut f = cholesky(&Matrix::identity(3)).unwrap();
        f.delete_index(1).unwrap();
        assert_eq!(f.lower(), Matrix::identity(2));
        assert_eq!(f.index_map(), &[0, 2]);

        let m = spd(6, 7);
        let mut f = cholesky(&m).unwrap();
        f.delete_index(2).unwrap();
        let keep = [0, 1, 3, 4, 5];
        let fresh = cholesky(&m.principal_submatrix(&keep)).unwrap();
        assert!(rel_err(&f.reconstruct(), &fresh.reconstruct()) < 1e-10);
        assert!(rel_err(&f.lower(), &fresh.lower()) < 1e-10);

        // Last index: pure truncation.
        let mut f = cholesky(&m).unwrap();
        let lead = f.lower();
        f.delete_index(5).unwrap();
        assert_eq!(f.lower(), Matrix::from_fn(5, 5, |i, j| lead[(i, j)]));

        assert_eq!(f.delete_index(5).unwrap_err(), Error::IndexOutOfRange { index: 5, dim: 5 });
    }

    #[test]
    fn solve_examples() {
        let f = cholesky(&Matrix::identity(3)).unwrap();
        let b = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        assert_eq!(f.solve(&b).unwrap(), b);

        let f = cholesky(&Matrix::from_rows(&[[4.0, 2.0], [2.0, 5.0]])).unwrap();
        let x = f.solve(&Matrix::from_rows(&[[8.0], [9.0]])).unwrap();
        assert!((x[(0, 0)] - 1.375).abs() < 1e-15);
        assert!((x[(1, 0)] - 1.25).abs() < 1e-15);

        let m = spd(5, 3);
        let f = cholesky(&m).unwrap();
        let b = Matrix::from_fn(5, 2, |i, j| (i * 3 + j) as f64 - 2.0);
        let both = f.solve(&b).unwrap();
        for j in 0..2 {
            let mut col = b.column(j);
            f.solve_in_place(&mut col).unwrap();
            assert_eq!(col, both.column(j));
        }
        assert!(f.solve(&Matrix::zeros(4, 1)).is_err());
    }

    #[test]
    fn refined_solve_examples() {
        let m = spd(6, 11);
        let b = Matrix::from_fn(6, 1, |i, _| i as f64 + 1.0);
        let plain = cholesky(&m).unwrap().solve(&b).unwrap();
        let r = refined_solve(&m, 0.0, &b, 2).unwrap();
        assert!(rel_err(&r.x, &plain) < 1e-12);

        let m = Matrix::diagonal(&[1.0, 1e-10]);
        let b = Matrix::from_rows(&[[1.0], [1e-10]]);
        let r = refined_solve(&m, 1e-12, &b, 2).unwrap();
        assert!((r.x[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((r.x[(1, 0)] - 1.0).abs() < 1e-5);
        assert!(r.residual_norm <= 1e-12 * b.frobenius_norm());
    }

    #[test]
    fn default_regularization_scales_with_trace() {
        assert_eq!(default_regularization(&Matrix::diagonal(&[2.0, 4.0])), 3e-12);
        assert_eq!(default_regularization(&Matrix::zeros(0, 0)), 0.0);
    }
}
