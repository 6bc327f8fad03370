//! From labelled points to the dual QP and back to a classifier.

use alloc::vec::Vec;

use crate::matrix::{check_len, Matrix};
use crate::qp::validate_labels;
use crate::{Error, KktReport, QpProblem, Result};

/// Labelled points, one row per point; labels are `±1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    points: Matrix,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(points: Matrix, labels: Vec<f64>) -> Result<Self> {
        check_len(points.rows(), labels.len())?;
        if points.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(&bad) = labels.iter().find(|&&l| l != 1.0 && l != -1.0) {
            return Err(Error::InvalidLabel(bad));
        }
        Ok(Self { points, labels })
    }

    /// Like [`Dataset::new`] but additionally requires both classes.
    pub fn two_class(points: Matrix, labels: Vec<f64>) -> Result<Self> {
        let ds = Self::new(points, labels)?;
        validate_labels(&ds.labels)?;
        Ok(ds)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    #[inline]
    pub fn points(&self) -> &Matrix {
        &self.points
    }

    #[inline]
    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn count(&self, label: f64) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `K_ij = exp(−γ‖xᵢ − xⱼ‖²)`; each unordered pair is evaluated once, so `K`
/// is exactly symmetric with unit diagonal.
pub fn gaussian_kernel(points: &Matrix, gamma: f64) -> Result<Matrix> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter("gamma must be positive and finite"));
    }
    let n = points.rows();
    let mut k = Matrix::identity(n);
    for i in 0..n {
        for j in 0..i {
            let v = libm::exp(-gamma * sq_dist(points.row(i), points.row(j)));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// `H = ZKZ`, `c = e`, `z = labels`.
pub fn assemble_problem(kernel: &Matrix, labels: &[f64], upper: f64) -> Result<QpProblem> {
    validate_labels(labels)?;
    check_len(kernel.rows(), labels.len())?;
    let h = Matrix::from_fn(labels.len(), labels.len(), |i, j| labels[i] * labels[j] * kernel[(i, j)]);
    QpProblem::svm(h, labels.to_vec(), upper)
}

/// Bias estimate and its free-support-vector cross-check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasEstimate {
    /// `−μ`.
    pub bias: f64,
    /// Mean of `zᵢ − Σⱼ αⱼzⱼKⱼᵢ` over free support vectors, if any.
    pub free_sv_mean: Option<f64>,
    /// `|bias − free_sv_mean|`.
    pub discrepancy: Option<f64>,
    pub free_support_vectors: usize,
}

/// `bias = −μ`, cross-checked against the free-SV average.
///
/// A free support vector has `eps < αᵢ < C − eps`; with `C = ∞` every
/// `αᵢ > eps` counts.
pub fn recover_bias(
    kernel: &Matrix,
    labels: &[f64],
    alpha: &[f64],
    upper: f64,
    eps: f64,
    kkt: &KktReport,
) -> Result<BiasEstimate> {
    check_len(labels.len(), alpha.len())?;
    if alpha.iter().all(|&a| a <= eps) {
        return Err(Error::DegenerateModel);
    }
    let bias = -kkt.mu;
    let free: Vec<usize> = (0..alpha.len())
        .filter(|&i| alpha[i] > eps && !(upper.is_finite() && alpha[i] >= upper - eps))
        .collect();
    let free_sv_mean = if free.is_empty() {
        None
    } else {
        let total: f64 = free
            .iter()
            .map(|&i| {
                let row = kernel.row(i);
                let f: f64 = (0..alpha.len()).map(|j| alpha[j] * labels[j] * row[j]).sum();
                labels[i] - f
            })
            .sum();
        Some(total / free.len() as f64)
    };
    Ok(BiasEstimate {
        bias,
        free_sv_mean,
        discrepancy: free_sv_mean.map(|m| (bias - m).abs()),
        free_support_vectors: free.len(),
    })
}

/// A trained Gaussian-kernel classifier. Only points with `αᵢ > 0` are kept
/// for evaluation.
#[derive(Clone, Debug)]
pub struct SvmModel {
    train: Dataset,
    gamma: f64,
    upper: f64,
    alpha: Vec<f64>,
    bias: f64,
    mu: f64,
    support: Vec<usize>,
}

impl SvmModel {
    pub fn new(train: Dataset, gamma: f64, upper: f64, alpha: Vec<f64>, bias: f64, mu: f64) -> Result<Self> {
        check_len(train.len(), alpha.len())?;
        let support = (0..alpha.len()).filter(|&i| alpha[i] > 0.0).collect();
        Ok(Self { train, gamma, upper, alpha, bias, mu, support })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn train(&self) -> &Dataset {
        &self.train
    }

    pub fn support_vectors(&self) -> &[usize] {
        &self.support
    }

    /// `f(t) = Σᵢ αᵢzᵢ exp(−γ‖xᵢ − t‖²) + bias`.
    pub fn decision_function(&self, t: &[f64]) -> Result<f64> {
        check_len(self.train.dim(), t.len())?;
        let s: f64 = self
            .support
            .iter()
            .map(|&i| {
                self.alpha[i]
                    * self.train.labels()[i]
                    * libm::exp(-self.gamma * sq_dist(self.train.point(i), t))
            })
            .sum();
        Ok(s + self.bias)
    }

    /// `sign(f(t))` with `sign(0) = +1`.
    pub fn predict(&self, t: &[f64]) -> Result<f64> {
        Ok(if self.decision_function(t)? >= 0.0 { 1.0 } else { -1.0 })
    }

    /// Fraction of `+1` points predicted `−1`, and of `−1` points predicted
    /// `+1`.
    pub fn classification_errors(&self, test: &Dataset) -> Result<(f64, f64)> {
        check_len(self.train.dim(), test.dim())?;
        let mut wrong = [0usize; 2];
        let mut total = [0usize; 2];
        for (i, &label) in test.labels().iter().enumerate() {
            let k = usize::from(label < 0.0);
            total[k] += 1;
            if self.predict(test.point(i))? != label {
                wrong[k] += 1;
            }
        }
        if total[0] == 0 {
            return Err(Error::MissingClass(1));
        }
        if total[1] == 0 {
            return Err(Error::MissingClass(-1));
        }
        Ok((wrong[0] as f64 / total[0] as f64, wrong[1] as f64 / total[1] as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn kernel_examples() {
        let pts = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.3, 0.9]]);
        let k = gaussian_kernel(&pts, 3.0).unwrap();
        for i in 0..3 {
            assert_eq!(k[(i, i)], 1.0);
            for j in 0..3 {
                assert_eq!(k[(i, j)], k[(j, i)]);
            }
        }
        assert!((k[(0, 1)] - 0.049_787_068_367_863_944).abs() < 1e-15);
        assert!(gaussian_kernel(&pts, 0.0).is_err());
    }

    #[test]
    fn assemble_examples() {
        let k = Matrix::from_rows(&[[1.0, 0.3], [0.3, 1.0]]);
        let p = assemble_problem(&k, &[1.0, -1.0], 1.0).unwrap();
        assert_eq!(p.hessian(), &Matrix::from_rows(&[[1.0, -0.3], [-0.3, 1.0]]));
        assert_eq!(p.linear(), &[1.0, 1.0]);
        assert!(p.is_kernel_normalized());
        assert_eq!(assemble_problem(&k, &[1.0, 1.0], 1.0).unwrap_err(), Error::SingleClass);
    }

    fn toy_model(alpha: Vec<f64>, bias: f64) -> SvmModel {
        let train = Dataset::new(Matrix::from_rows(&[[0.0], [1.0]]), vec![1.0, -1.0]).unwrap();
        SvmModel::new(train, 1.0, f64::INFINITY, alpha, bias, -bias).unwrap()
    }

    #[test]
    fn empty_model_predicts_positive() {
        let m = toy_model(vec![0.0, 0.0], 0.0);
        assert_eq!(m.decision_function(&[0.7]).unwrap(), 0.0);
        assert_eq!(m.predict(&[0.7]).unwrap(), 1.0);
        assert!(m.decision_function(&[0.7, 1.0]).is_err());
    }

    #[test]
    fn toy_midpoint_value() {
        // f(0.5) = 1·e^{-0.25} − 1·e^{-0.25} + 0 = 0.
        let m = toy_model(vec![1.0, 1.0], 0.0);
        assert_eq!(m.decision_function(&[0.5]).unwrap(), 0.0);
        let f0 = m.decision_function(&[0.0]).unwrap();
        assert!((f0 - (1.0 - libm::exp(-1.0))).abs() < 1e-15);
    }

    #[test]
    fn bias_examples() {
        let kkt = KktReport { mu: 0.0, grad_norm_k: 0.0, sign_violation: 0.0, rel_residual: 0.0, x_inf_norm: 1.0 };
        let k = Matrix::identity(2);
        let b = recover_bias(&k, &[1.0, -1.0], &[1.0, 1.0], f64::INFINITY, 1e-9, &kkt).unwrap();
        assert_eq!(b.bias, 0.0);
        assert_eq!(b.free_sv_mean, Some(0.0));
        assert_eq!(b.discrepancy, Some(0.0));
        assert_eq!(
            recover_bias(&k, &[1.0, -1.0], &[0.0, 0.0], f64::INFINITY, 1e-9, &kkt).unwrap_err(),
            Error::DegenerateModel
        );
    }

    #[test]
    fn error_rates() {
        let test = Dataset::new(Matrix::from_rows(&[[0.0], [0.1], [1.0], [0.9]]), vec![1.0, 1.0, -1.0, -1.0]).unwrap();
        let always_pos = toy_model(vec![0.0, 0.0], 1.0);
        assert_eq!(always_pos.classification_errors(&test).unwrap(), (0.0, 1.0));
        let perfect = toy_model(vec![1.0, 1.0], 0.0);
        assert_eq!(perfect.classification_errors(&test).unwrap(), (0.0, 0.0));
        let one_class = Dataset::new(Matrix::from_rows(&[[0.0]]), vec![1.0]).unwrap();
        assert_eq!(perfect.classification_errors(&one_class).unwrap_err(), Error::MissingClass(-1));
    }
}
