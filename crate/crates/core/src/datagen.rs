//! Seeded synthetic benchmarks: d-dimensional half-moons and a 3×3
//! checkerboard.
//!
//! All randomness comes from [`ChaCha8Rng`] seeded with a `u64`; normals use
//! the ziggurat sampler from `rand_distr`.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::svm::Dataset;
use crate::{Error, Matrix, Result};

/// Parameters of the half-moon family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfmoonSpec {
    pub d: usize,
    pub delta: f64,
    pub n: usize,
    pub seed: u64,
}

impl HalfmoonSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidParameter("half-moon dimension must be at least 2"));
        }
        if !(self.delta > 0.0 && self.delta < 2.0) {
            return Err(Error::InvalidParameter("half-moon delta must lie in (0, 2)"));
        }
        if self.n < 4 || self.n % 4 != 0 {
            return Err(Error::InvalidParameter("half-moon n must be a positive multiple of 4"));
        }
        Ok(())
    }
}

/// Draws one point of `S₁ = {x : ‖x‖₂ ≤ 1, ‖x + δe₁‖₂ ≥ 1}`.
///
/// `x₁ ~ U[−δ/2, 1]`, a uniformly random direction `ȳ` in `ℝ^{d−1}`, and a
/// radius `λ ~ U[δ₁, δ₂]` with `δ₁ = √max(0, 1 − (x₁+δ)²)`, `δ₂ = √(1 − x₁²)`.
pub fn sample_s1_point<R: Rng + ?Sized>(d: usize, delta: f64, rng: &mut R) -> Vec<f64> {
    let x1 = rng.random_range(-delta / 2.0..=1.0);
    let mut y: Vec<f64> = Vec::with_capacity(d);
    y.push(x1);
    let norm = loop {
        y.truncate(1);
        y.extend((1..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let nrm = crate::matrix::norm2(&y[1..]);
        if nrm > 0.0 {
            break nrm;
        }
    };
    let lo = libm::sqrt((1.0 - (x1 + delta) * (x1 + delta)).max(0.0));
    let hi = libm::sqrt((1.0 - x1 * x1).max(0.0));
    // lo ≤ hi holds for x₁ ≥ −δ/2 up to rounding.
    let lambda = if hi > lo { rng.random_range(lo..=hi) } else { hi };
    for v in &mut y[1..] {
        *v *= lambda / norm;
    }
    y
}

/// `‖x‖₂ ≤ 1 + tol` and `‖x + δe₁‖₂ ≥ 1 − tol`.
pub fn in_s1(x: &[f64], delta: f64, tol: f64) -> bool {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let shifted = r2 + 2.0 * delta * x[0] + delta * delta;
    libm::sqrt(r2) <= 1.0 + tol && libm::sqrt(shifted.max(0.0)) >= 1.0 - tol
}

/// `x − δe₁ ∈ S₁` or `x + δe₁ ∈ S₁`.
pub fn in_s2(x: &[f64], delta: f64, tol: f64) -> bool {
    let mut y = x.to_vec();
    y[0] = x[0] - delta;
    if in_s1(&y, delta, tol) {
        return true;
    }
    y[0] = x[0] + delta;
    in_s1(&y, delta, tol)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Family {
    Halfmoon { d: usize, delta: f64 },
    Checkerboard,
}

/// Endless source of labelled points from a generator's distribution. Owns
/// its RNG, so it continues the stream that produced the training set.
#[derive(Clone, Debug)]
pub struct Sampler {
    family: Family,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn dim(&self) -> usize {
        match self.family {
            Family::Halfmoon { d, .. } => d,
            Family::Checkerboard => 2,
        }
    }

    /// One point and its label. Half-moon: `+1` from `S₁` with probability
    /// ½, otherwise a shifted `S₁` point in `S⁺` or `S⁻` with equal odds.
    pub fn sample(&mut self) -> (Vec<f64>, f64) {
        match self.family {
            Family::Halfmoon { d, delta } => {
                let mut x = sample_s1_point(d, delta, &mut self.rng);
                if self.rng.random::<bool>() {
                    (x, 1.0)
                } else {
                    x[0] += if self.rng.random::<bool>() { delta } else { -delta };
                    (x, -1.0)
                }
            }
            Family::Checkerboard => {
                let x = [self.rng.random_range(0.0..=3.0), self.rng.random_range(0.0..=3.0)];
                (x.to_vec(), checkerboard_label(x[0], x[1]))
            }
        }
    }

    pub fn dataset(&mut self, n: usize) -> Result<Dataset> {
        let d = self.dim();
        let mut data = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let (x, l) = self.sample();
            data.extend_from_slice(&x);
            labels.push(l);
        }
        Dataset::new(Matrix::from_vec(n, d, data)?, labels)
    }
}

/// Training set of `n` points (first `n/2` labelled `+1` in `S₁`, then `n/4`
/// shifted by `+δe₁` and `n/4` by `−δe₁`, labelled `−1`) and a sampler for
/// test points from the same distribution.
pub fn gen_halfmoon(spec: &HalfmoonSpec) -> Result<(Dataset, Sampler)> {
    spec.validate()?;
    let HalfmoonSpec { d, delta, n, seed } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = sample_s1_point(d, delta, &mut rng);
        let label = if i < n / 2 {
            1.0
        } else {
            x[0] += if i < 3 * n / 4 { delta } else { -delta };
            -1.0
        };
        data.extend_from_slice(&x);
        labels.push(label);
    }
    let train = Dataset::new(Matrix::from_vec(n, d, data)?, labels)?;
    Ok((train, Sampler { family: Family::Halfmoon { d, delta }, rng }))
}

fn cell(v: f64) -> i64 {
    (libm::floor(v) as i64).clamp(0, 2)
}

/// `+1` iff `⌊x₁⌋ + ⌊x₂⌋` is even, with cell indices clipped to `0..=2`.
pub fn checkerboard_label(x1: f64, x2: f64) -> f64 {
    if (cell(x1) + cell(x2)) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `n` points uniform on `[0, 3]²` with checkerboard labels.
pub fn gen_checkerboard(n: usize, seed: u64) -> Result<(Dataset, Sampler)> {
    if n < 2 {
        return Err(Error::InvalidParameter("checkerboard needs at least 2 points"));
    }
    let mut sampler = Sampler { family: Family::Checkerboard, rng: ChaCha8Rng::seed_from_u64(seed) };
    let train = sampler.dataset(n)?;
    Ok((train, sampler))
}
