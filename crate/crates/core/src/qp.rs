//! The SVM dual QP: problem data, objective and gradient, the two projections,
//! active-set bookkeeping, and the optimality test.
//!
//! Upper bound `C = f64::INFINITY` is a first-class value: every upper-bound
//! case below is simply skipped and `sigma_i = -1` never occurs.

use alloc::vec::Vec;

use crate::matrix::{
    check_len, dot, dot_compensated, dot_compensated_parts, norm2, norm_inf, sum_compensated, sum_compensated_products, two_sum,
    weighted_sum_compensated, Matrix,
};
use crate::{Error, Result};

/// `min ½xᵀHx − cᵀx  s.t.  zᵀx = 0, 0 ≤ x ≤ C`.
#[derive(Clone, Debug)]
pub struct QpProblem {
    h: Matrix,
    c: Vec<f64>,
    z: Vec<f64>,
    upper: f64,
    kernel_normalized: bool,
}

impl QpProblem {
    pub fn new(h: Matrix, c: Vec<f64>, z: Vec<f64>, upper: f64) -> Result<Self> {
        let n = z.len();
        if !h.is_square() {
            return Err(Error::DimensionMismatch { expected: h.rows(), got: h.cols() });
        }
        check_len(n, h.rows())?;
        check_len(n, c.len())?;
        if upper.is_nan() || upper <= 0.0 {
            return Err(Error::InvalidBound(upper));
        }
        if h.as_slice().iter().chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        validate_labels(&z)?;
        for i in 0..n {
            if h[(i, i)] <= 0.0 {
                return Err(Error::NonPositiveDiagonal { index: i });
            }
            for j in 0..i {
                let (a, b) = (h[(i, j)], h[(j, i)]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        let kernel_normalized = (0..n).all(|i| h[(i, i)] == 1.0);
        Ok(Self { h, c, z, upper, kernel_normalized })
    }

    /// SVM form with `c = e`.
    pub fn svm(h: Matrix, z: Vec<f64>, upper: f64) -> Result<Self> {
        let n = z.len();
        Self::new(h, alloc::vec![1.0; n], z, upper)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.z.len()
    }

    #[inline]
    pub fn hessian(&self) -> &Matrix {
        &self.h
    }

    #[inline]
    pub fn linear(&self) -> &[f64] {
        &self.c
    }

    #[inline]
    pub fn labels(&self) -> &[f64] {
        &self.z
    }

    /// The box bound `C`; may be `f64::INFINITY`.
    #[inline]
    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// `true` when every `H_ii == 1` (Gaussian kernels).
    #[inline]
    pub fn is_kernel_normalized(&self) -> bool {
        self.kernel_normalized
    }

    /// Default active-set tolerance: `1e-9 · max(1, C)` with `C` replaced by 1
    /// when infinite.
    pub fn default_eps(&self) -> f64 {
        let c = if self.upper.is_finite() { self.upper } else { 1.0 };
        1e-9 * c.max(1.0)
    }

    /// `q(x) = ½xᵀHx − cᵀx`, evaluated as `Σ xᵢ(½(Hx)ᵢ − cᵢ)` with every
    /// factor carried in double-double. With `‖x‖ ~ 1e12` and `|Hx| ~ 1e6`
    /// a single rounding of `(Hx)ᵢ` already moves `q` by ~1e2.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        let parts = (0..self.dim()).map(|i| {
            let (hi, lo) = dot_compensated_parts(self.h.row(i), x);
            let (a, b) = two_sum(0.5 * hi, -self.c[i]);
            (a, b + 0.5 * lo)
        });
        Ok(weighted_sum_compensated(x, parts))
    }

    /// `g = Hx − c` in compensated arithmetic.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), x.len())?;
        Ok((0..self.dim()).map(|i| dot_compensated(self.h.row(i), x) - self.c[i]).collect())
    }

    /// Plain-precision gradient into `out`; the solvers' hot path.
    pub(crate) fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, gi) in out.iter_mut().enumerate() {
            *gi = dot(self.h.row(i), x) - self.c[i];
        }
    }

    /// Compensated `(Hx − c)_i` for the rows in `rows`. Zero coordinates of
    /// `x` are skipped, which does not change the result.
    pub(crate) fn gradient_rows_compensated(&self, x: &[f64], rows: &[usize], out: &mut [f64]) {
        let support: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
        let xs: Vec<f64> = support.iter().map(|&j| x[j]).collect();
        for (o, &i) in out.iter_mut().zip(rows) {
            let row = self.h.row(i);
            *o = sum_compensated_products(support.iter().map(|&j| row[j]), &xs) - self.c[i];
        }
    }

    /// `sᵀHs` using only the nonzero entries listed in `support`.
    pub(crate) fn curvature_on(&self, s: &[f64], support: &[usize]) -> f64 {
        let mut total = 0.0;
        for &a in support {
            let row = self.h.row(a);
            let inner: f64 = support.iter().map(|&b| row[b] * s[b]).sum();
            total += s[a] * inner;
        }
        total
    }

    /// Prop.-1 optimality report at a feasible `x`.
    pub fn kkt_report(&self, x: &[f64], eps: f64) -> Result<KktReport> {
        let g = self.gradient(x)?;
        let part = active_partition(x, self.upper, eps);
        kkt_from_parts(&g, &self.z, x, &part)
    }

    /// Cancels the rounding residual `zᵀx` by shifting one coordinate from
    /// `candidates`. The smallest coordinate that stays inside `(eps, C − eps)`
    /// is used, since a shift on a small value rounds least. Returns the
    /// coordinate and the shift, or `None` if nothing moved.
    pub(crate) fn restore_equality(&self, x: &mut [f64], candidates: &[usize], eps: f64) -> Option<(usize, f64)> {
        let r = dot_compensated(&self.z, x);
        if r == 0.0 {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for &k in candidates {
            let shift = -r / self.z[k];
            let v = x[k] + shift;
            if !(v > eps && v < self.upper - eps) {
                continue;
            }
            if best.is_none_or(|(b, _)| x[k] < x[b]) {
                best = Some((k, shift));
            }
        }
        let (k, shift) = best?;
        x[k] += shift;
        Some((k, shift))
    }

    /// `|zᵀx|` and the largest bound violation of `x`.
    pub fn feasibility_violation(&self, x: &[f64]) -> (f64, f64) {
        let eq = dot_compensated(&self.z, x).abs();
        let bound = x.iter().fold(0.0f64, |m, &v| {
            let below = (-v).max(0.0);
            let above = if self.upper.is_finite() { (v - self.upper).max(0.0) } else { 0.0 };
            m.max(below).max(above)
        });
        (eq, bound)
    }
}

pub(crate) fn validate_labels(z: &[f64]) -> Result<()> {
    let mut pos = false;
    let mut neg = false;
    for &v in z {
        if v == 1.0 {
            pos = true;
        } else if v == -1.0 {
            neg = true;
        } else {
            return Err(Error::InvalidLabel(v));
        }
    }
    if pos && neg {
        Ok(())
    } else {
        Err(Error::SingleClass)
    }
}

/// Bound state of a single coordinate: `1` at the lower bound, `-1` at the
/// upper bound, `0` free. Both tests use the absolute tolerance `eps`.
#[inline]
pub fn bound_sign(xi: f64, upper: f64, eps: f64) -> i8 {
    if xi <= eps {
        1
    } else if upper.is_finite() && xi >= upper - eps {
        -1
    } else {
        0
    }
}

/// `y − (zᵀy/n)·z`, the orthogonal projection onto `{zᵀx = 0}` for `z ∈ {±1}ⁿ`.
pub fn project_nullspace(z: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_len(z.len(), y.len())?;
    let n = z.len() as f64;
    let t = dot_compensated(z, y) / n;
    Ok(y.iter().zip(z).map(|(yi, zi)| yi - t * zi).collect())
}

/// Projection of `y` onto the tangent cone of `[0, C]ⁿ` at `x`.
pub fn project_tangent_cone(x: &[f64], y: &[f64], upper: f64, eps: f64) -> Result<Vec<f64>> {
    check_len(x.len(), y.len())?;
    Ok(x.iter()
        .zip(y)
        .map(|(&xi, &yi)| match bound_sign(xi, upper, eps) {
            1 => yi.max(0.0),
            -1 => yi.min(0.0),
            _ => yi,
        })
        .collect())
}

/// Active (`A`) / inactive (`K`) split of the indices together with the
/// sign vector σ.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivePartition {
    pub active: Vec<usize>,
    pub inactive: Vec<usize>,
    pub sigma: Vec<i8>,
    pub eps: f64,
}

impl ActivePartition {
    pub fn n(&self) -> usize {
        self.sigma.len()
    }
}

pub fn active_partition(x: &[f64], upper: f64, eps: f64) -> ActivePartition {
    let mut active = Vec::new();
    let mut inactive = Vec::new();
    let sigma = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let s = bound_sign(xi, upper, eps);
            if s == 0 {
                inactive.push(i);
            } else {
                active.push(i);
            }
            s
        })
        .collect();
    ActivePartition { active, inactive, sigma, eps }
}

/// Equality multiplier μ: the mean of `zₖgₖ` over `K`, or when `K = ∅`
/// the smallest `σᵢgᵢ` over `{i : σᵢzᵢ = 1}`.
pub fn multiplier_mu(g: &[f64], z: &[f64], part: &ActivePartition) -> Result<f64> {
    check_len(z.len(), g.len())?;
    check_len(part.n(), g.len())?;
    if !part.inactive.is_empty() {
        let s = sum_compensated(part.inactive.iter().map(|&k| g[k] * z[k]));
        return Ok(s / part.inactive.len() as f64);
    }
    part.sigma
        .iter()
        .enumerate()
        .filter(|&(i, &s)| f64::from(s) * z[i] == 1.0)
        .map(|(i, &s)| f64::from(s) * g[i])
        .reduce(f64::min)
        .ok_or(Error::Infeasible("all indices active with sigma_i z_i = -1"))
}

/// Optimality measures. `rel_residual` combines both parts as
/// `max(grad_norm_k, sign_violation) / max(1, ‖x‖∞)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktReport {
    pub mu: f64,
    /// `‖g̃_K‖₂`
    pub grad_norm_k: f64,
    /// `max(0, −minᵢ σᵢg̃ᵢ)`
    pub sign_violation: f64,
    pub rel_residual: f64,
    pub x_inf_norm: f64,
}

pub(crate) fn kkt_from_parts(
    g: &[f64],
    z: &[f64],
    x: &[f64],
    part: &ActivePartition,
) -> Result<KktReport> {
    let mu = multiplier_mu(g, z, part)?;
    let gk: Vec<f64> = part.inactive.iter().map(|&k| g[k] - mu * z[k]).collect();
    let grad_norm_k = norm2(&gk);
    let min_signed = part
        .active
        .iter()
        .map(|&i| f64::from(part.sigma[i]) * (g[i] - mu * z[i]))
        .fold(0.0f64, f64::min);
    let sign_violation = (-min_signed).max(0.0);
    let x_inf_norm = norm_inf(x);
    Ok(KktReport {
        mu,
        grad_norm_k,
        sign_violation,
        rel_residual: grad_norm_k.max(sign_violation) / x_inf_norm.max(1.0),
        x_inf_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toy(h: Matrix, upper: f64) -> QpProblem {
        QpProblem::svm(h, vec![1.0, -1.0], upper).unwrap()
    }

    #[test]
    fn objective_examples() {
        let p = QpProblem::new(Matrix::diagonal(&[2.0, 2.0]), vec![1.0, 1.0], vec![1.0, -1.0], 1.0)
            .unwrap();
        assert_eq!(p.objective(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(p.objective(&[1.0, 1.0]).unwrap(), 0.0);
        let p = toy(Matrix::identity(2), 1.0);
        assert_eq!(p.objective(&[1.0, 1.0]).unwrap(), -1.0);
        assert!(p.objective(&[1.0]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let p = toy(Matrix::identity(2), 1.0);
        assert_eq!(p.gradient(&[0.0, 0.0]).unwrap(), vec![-1.0, -1.0]);
        assert_eq!(p.gradient(&[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        let h = Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]);
        let p = QpProblem::new(h, vec![0.0, 0.0], vec![1.0, -1.0], 1.0).unwrap();
        assert_eq!(p.gradient(&[1.0, 0.0]).unwrap(), vec![2.0, 1.0]);
        assert!(p.gradient(&[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn construction_validates() {
        let h = Matrix::identity(2);
        assert_eq!(QpProblem::svm(h.clone(), vec![1.0, 1.0], 1.0).unwrap_err(), Error::SingleClass);
        assert_eq!(QpProblem::svm(h.clone(), vec![1.0, 0.5], 1.0).unwrap_err(), Error::InvalidLabel(0.5));
        assert_eq!(QpProblem::svm(h.clone(), vec![1.0, -1.0], 0.0).unwrap_err(), Error::InvalidBound(0.0));
        let asym = Matrix::from_rows(&[[1.0, 0.5], [0.4, 1.0]]);
        assert!(matches!(QpProblem::svm(asym, vec![1.0, -1.0], 1.0), Err(Error::NotSymmetric { .. })));
        let neg = Matrix::diagonal(&[1.0, -1.0]);
        assert_eq!(
            QpProblem::svm(neg, vec![1.0, -1.0], 1.0).unwrap_err(),
            Error::NonPositiveDiagonal { index: 1 }
        );
        assert!(QpProblem::svm(h, vec![1.0, -1.0], f64::INFINITY).unwrap().is_kernel_normalized());
    }

    #[test]
    fn nullspace_projection_examples() {
        assert_eq!(project_nullspace(&[1.0, -1.0], &[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(project_nullspace(&[1.0, 1.0], &[1.0, 0.0]).unwrap(), vec![0.5, -0.5]);
        let z = [1.0, -1.0, 1.0];
        assert_eq!(project_nullspace(&z, &z).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn tangent_cone_examples() {
        let c = 1.0;
        assert_eq!(project_tangent_cone(&[0.5, 0.3], &[-1.0, 2.0], c, 1e-9).unwrap(), vec![-1.0, 2.0]);
        assert_eq!(project_tangent_cone(&[0.0], &[-1.0], c, 1e-9).unwrap(), vec![0.0]);
        assert_eq!(project_tangent_cone(&[1.0], &[-1.0], c, 1e-9).unwrap(), vec![-1.0]);
        assert_eq!(project_tangent_cone(&[1.0], &[1.0], c, 1e-9).unwrap(), vec![0.0]);
        // No upper face when C is infinite.
        assert_eq!(project_tangent_cone(&[1e300], &[1.0], f64::INFINITY, 1e-9).unwrap(), vec![1.0]);
    }

    #[test]
    fn partition_examples() {
        let p = active_partition(&[0.0, 0.0, 0.0], 1.0, 1e-9);
        assert_eq!(p.active, vec![0, 1, 2]);
        assert_eq!(p.sigma, vec![1, 1, 1]);

        let p = active_partition(&[0.0, 0.5, 1.0], 1.0, 1e-9);
        assert_eq!(p.active, vec![0, 2]);
        assert_eq!(p.inactive, vec![1]);
        assert_eq!(p.sigma, vec![1, 0, -1]);

        let p = active_partition(&[0.2, 0.7], 1.0, 1e-9);
        assert!(p.active.is_empty());
        assert_eq!(p.sigma, vec![0, 0]);

        let p = active_partition(&[5.0, 1e-12], f64::INFINITY, 1e-9);
        assert_eq!(p.sigma, vec![0, 1]);
    }

    #[test]
    fn mu_examples() {
        let part = active_partition(&[0.5, 0.5], 1.0, 1e-9);
        assert_eq!(multiplier_mu(&[2.0, -2.0], &[1.0, -1.0], &part).unwrap(), 2.0);
        let z = [1.0, -1.0, -1.0];
        let mu0 = -0.75;
        let g: Vec<f64> = z.iter().map(|zi| mu0 * zi).collect();
        let part = active_partition(&[0.3, 0.1, 0.2], 1.0, 1e-9);
        assert_eq!(multiplier_mu(&g, &z, &part).unwrap(), mu0);

        // K empty at x = 0, z = (1,-1): only index 0 has sigma z = 1.
        let part = active_partition(&[0.0, 0.0], 1.0, 1e-9);
        assert_eq!(multiplier_mu(&[-3.0, 7.0], &[1.0, -1.0], &part).unwrap(), -3.0);

        // All active with sigma z = -1 everywhere: corrupted iterate.
        let part = active_partition(&[0.0, 1.0], 1.0, 1e-9);
        assert!(matches!(multiplier_mu(&[0.0, 0.0], &[-1.0, 1.0], &part), Err(Error::Infeasible(_))));
    }

    #[test]
    fn kkt_examples() {
        let p = toy(Matrix::identity(2), f64::INFINITY);
        let r = p.kkt_report(&[1.0, 1.0], 1e-9).unwrap();
        assert_eq!(r.mu, 0.0);
        assert_eq!(r.rel_residual, 0.0);
        assert_eq!(r.x_inf_norm, 1.0);

        let r = p.kkt_report(&[0.0, 0.0], 1e-9).unwrap();
        assert!(r.rel_residual > 0.0);
    }
}
