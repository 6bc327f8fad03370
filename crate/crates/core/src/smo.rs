//! Two-coordinate baselines: greedy SMO (GSMO) and uniformly random SMO
//! (RSMO).
//!
//! Every step moves along `eᵢ − zᵢzⱼeⱼ`, which keeps `zᵀx = 0`. Along that
//! line the objective is
//!
//! ```text
//! q(x + λ(eᵢ − zᵢzⱼeⱼ)) = q(x) + λ(g̃ᵢ − zᵢzⱼg̃ⱼ) + ½λ²(Hᵢᵢ + Hⱼⱼ − 2zᵢzⱼHᵢⱼ)
//! ```
//!
//! with `g̃ = g − (gᵀz/n)z`. The gradient is maintained incrementally in O(n)
//! per step and recomputed from scratch every `refresh_period` steps.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::{check_len, dot, norm1};
use crate::qp::{active_partition, bound_sign, kkt_from_parts};
use crate::{Diagnostics, Error, QpProblem, Result, Solution, Status, StepKind, TracePoint};

#[derive(Clone, Debug, PartialEq)]
pub struct SmoOptions {
    /// `None`: `1000·n` for GSMO, `10000·n` for RSMO.
    pub max_iters: Option<usize>,
    pub kkt_tol: f64,
    pub eps_active: Option<f64>,
    pub seed: u64,
    /// The KKT test (and an objective sample) runs every this many steps;
    /// `None` means `n`.
    pub check_period: Option<usize>,
    /// From-scratch gradient recomputation period; `None` means `n`.
    pub refresh_period: Option<usize>,
}

impl Default for SmoOptions {
    fn default() -> Self {
        Self {
            max_iters: None,
            kkt_tol: 1e-10,
            eps_active: None,
            seed: 0,
            check_period: None,
            refresh_period: None,
        }
    }
}

/// Iterate, gradient and `μ = gᵀz/n`.
#[derive(Clone, Debug)]
pub struct SmoState {
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    /// `gᵀz`, maintained alongside `g`.
    gz: f64,
    pub iter: usize,
}

impl SmoState {
    pub fn new(p: &QpProblem, x: Vec<f64>) -> Result<Self> {
        check_len(p.dim(), x.len())?;
        let mut st = Self { g: vec![0.0; x.len()], x, gz: 0.0, iter: 0 };
        st.refresh(p);
        Ok(st)
    }

    /// Recomputes `g = Hx − c` from scratch.
    pub fn refresh(&mut self, p: &QpProblem) {
        p.gradient_into(&self.x, &mut self.g);
        self.gz = dot(&self.g, p.labels());
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.gz / self.x.len() as f64
    }

    /// `g̃ = g − μz`.
    pub fn reduced_gradient(&self, z: &[f64]) -> Vec<f64> {
        let mu = self.mu();
        self.g.iter().zip(z).map(|(g, zi)| g - mu * zi).collect()
    }
}

/// A GSMO choice: move `x` by `lambda·(eᵢ − zᵢzⱼeⱼ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection {
    pub i: usize,
    pub j: usize,
    pub lambda: f64,
    /// Model decrease `λ(g̃ᵢ − zᵢzⱼg̃ⱼ) + ½λ²dᵢⱼ` (negative).
    pub model: f64,
}

#[inline]
fn pair_curvature(p: &QpProblem, i: usize, j: usize, zz: f64) -> f64 {
    let h = p.hessian();
    let hij = h.row(i)[j];
    if p.is_kernel_normalized() {
        2.0 - 2.0 * zz * hij
    } else {
        h.row(i)[i] + h.row(j)[j] - 2.0 * zz * hij
    }
}

/// Largest `|λ|` in the direction `sign(λ)` keeping `xⱼ − zᵢzⱼλ` in `[0, C]`.
#[inline]
fn room_j(xj: f64, zz: f64, dir: f64, upper: f64) -> f64 {
    if -zz * dir > 0.0 {
        upper - xj
    } else {
        xj
    }
}

/// Greedy two-stage choice: `i` maximizes `|s̃ᵢ|` for `s̃ = Π_{B,x}(−g̃)`;
/// `j ≠ i` ranges over `g̃ᵢ(g̃ᵢ − zᵢzⱼg̃ⱼ) > 0` and minimizes the clipped
/// one-dimensional model. `None` when `s̃ = 0` or no candidate improves.
pub fn gsmo_select(st: &SmoState, p: &QpProblem, eps: f64) -> Option<Selection> {
    let z = p.labels();
    let c = p.upper();
    let mu = st.mu();
    let n = st.x.len();

    let mut i = usize::MAX;
    let mut best = 0.0;
    let mut s_i = 0.0;
    for k in 0..n {
        let s = -(st.g[k] - mu * z[k]);
        let s = match bound_sign(st.x[k], c, eps) {
            1 => s.max(0.0),
            -1 => s.min(0.0),
            _ => s,
        };
        if s.abs() > best {
            best = s.abs();
            i = k;
            s_i = s;
        }
    }
    if i == usize::MAX {
        return None;
    }
    let lam_i = if s_i <= 0.0 { -st.x[i] } else { c - st.x[i] };
    let gt_i = st.g[i] - mu * z[i];

    let mut sel: Option<Selection> = None;
    for j in 0..n {
        if j == i {
            continue;
        }
        let zz = z[i] * z[j];
        let diff = gt_i - zz * (st.g[j] - mu * z[j]);
        if gt_i * diff <= 0.0 {
            continue;
        }
        let d = pair_curvature(p, i, j, zz);
        if !(d > 0.0) {
            continue;
        }
        let lam_hat = -diff / d;
        let dir = lam_hat.signum();
        let lam_j = dir * lam_hat.abs().min(room_j(st.x[j], zz, dir, c));
        let lam = dir * lam_i.abs().min(lam_j.abs());
        let model = lam * diff + 0.5 * lam * lam * d;
        if model < sel.map_or(0.0, |s| s.model) {
            sel = Some(Selection { i, j, lambda: lam, model });
        }
    }
    sel
}

/// `x ← x + λ(eᵢ − zᵢzⱼeⱼ)` with the O(n) gradient update
/// `g ← g + λ(Heᵢ − zᵢzⱼHeⱼ)`.
pub fn smo_step(st: &mut SmoState, p: &QpProblem, i: usize, j: usize, lambda: f64, eps: f64) -> Result<()> {
    st.iter += 1;
    if lambda == 0.0 {
        return Ok(());
    }
    let z = p.labels();
    let c = p.upper();
    let zz = z[i] * z[j];
    let xi = st.x[i] + lambda;
    let xj = st.x[j] - zz * lambda;
    let out = |v: f64| v < -eps || (c.is_finite() && v > c + eps);
    if out(xi) || out(xj) {
        return Err(Error::Infeasible("SMO step left the box"));
    }
    // Snap onto a bound that the step was clipped to.
    let snap = |v: f64| {
        if c.is_finite() && (v - c).abs() <= 4.0 * f64::EPSILON * c {
            c
        } else {
            v.clamp(0.0, c)
        }
    };
    let (new_i, new_j) = (snap(xi), snap(xj));
    let (di, dj) = (new_i - st.x[i], new_j - st.x[j]);
    st.x[i] = new_i;
    st.x[j] = new_j;

    let h = p.hessian();
    let (hi, hj) = (h.row(i), h.row(j));
    let mut dgz = 0.0;
    for k in 0..st.g.len() {
        let delta = di * hi[k] + dj * hj[k];
        st.g[k] += delta;
        dgz += delta * z[k];
    }
    st.gz += dgz;
    Ok(())
}

/// Greedy SMO from `x = 0`.
pub fn solve_gsmo(p: &QpProblem, opts: &SmoOptions) -> Result<Solution> {
    let st = SmoState::new(p, vec![0.0; p.dim()])?;
    run(p, st, opts, 1000, |st, p, eps| gsmo_select(st, p, eps).map(|s| (s.i, s.j, s.lambda)))
}

/// Random SMO from `x = 0`; pairs are drawn uniformly without replacement.
pub fn solve_rsmo(p: &QpProblem, opts: &SmoOptions) -> Result<Solution> {
    solve_rsmo_from(p, vec![0.0; p.dim()], opts)
}

/// Random SMO from a given feasible point.
pub fn solve_rsmo_from(p: &QpProblem, x0: Vec<f64>, opts: &SmoOptions) -> Result<Solution> {
    let st = SmoState::new(p, x0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = p.dim();
    run(p, st, opts, 10_000, move |st, p, _eps| {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        Some((i, j, random_step(st, p, i, j)))
    })
}

/// Clipped exact step along `eᵢ − zᵢzⱼeⱼ`; `μ` cancels in `g̃ᵢ − zᵢzⱼg̃ⱼ`.
fn random_step(st: &SmoState, p: &QpProblem, i: usize, j: usize) -> f64 {
    let z = p.labels();
    let c = p.upper();
    let zz = z[i] * z[j];
    let d = pair_curvature(p, i, j, zz);
    if !(d > 0.0) {
        return 0.0;
    }
    let lam_hat = -(st.g[i] - zz * st.g[j]) / d;
    let dir = lam_hat.signum();
    let room_i = if dir > 0.0 { c - st.x[i] } else { st.x[i] };
    dir * lam_hat.abs().min(room_i).min(room_j(st.x[j], zz, dir, c))
}

fn run(
    p: &QpProblem,
    mut st: SmoState,
    opts: &SmoOptions,
    default_factor: usize,
    mut select: impl FnMut(&SmoState, &QpProblem, f64) -> Option<(usize, usize, f64)>,
) -> Result<Solution> {
    let n = p.dim();
    let eps = opts.eps_active.unwrap_or_else(|| p.default_eps());
    let max_iters = opts.max_iters.unwrap_or(default_factor * n);
    let check = opts.check_period.unwrap_or(n).max(1);
    let refresh = opts.refresh_period.unwrap_or(n).max(1);
    let mut diag = Diagnostics::default();
    let mut trace = Vec::new();
    let mut last_q = p.objective(&st.x)?;
    trace.push(TracePoint { iteration: 0, q: last_q, kind: StepKind::Start });

    let status = loop {
        if st.iter % refresh == 0 && st.iter > 0 {
            st.refresh(p);
            diag.gradient_refreshes += 1;
        }
        if st.iter % check == 0 {
            let (eq, bound) = p.feasibility_violation(&st.x);
            diag.record_iterate(eq, norm1(&st.x), bound);
            if st.iter > 0 {
                let q = p.objective(&st.x)?;
                if diag.record_change(last_q, q) {
                    diag.smo_increases += 1;
                }
                last_q = q;
                trace.push(TracePoint { iteration: st.iter, q, kind: StepKind::Smo });
            }
            // The maintained gradient is fresh enough for the stopping test;
            // the final report recomputes it.
            let part = active_partition(&st.x, p.upper(), eps);
            if kkt_from_parts(&st.g, p.labels(), &st.x, &part)?.rel_residual <= opts.kkt_tol {
                break Status::Converged;
            }
        }
        if st.iter >= max_iters {
            break Status::IterationLimit;
        }
        match select(&st, p, eps) {
            Some((i, j, lambda)) => smo_step(&mut st, p, i, j, lambda, eps)?,
            None => {
                let rel = p.kkt_report(&st.x, eps)?.rel_residual;
                break if rel <= opts.kkt_tol { Status::Converged } else { Status::Stalled };
            }
        }
    };

    let kkt = p.kkt_report(&st.x, eps)?;
    let objective = p.objective(&st.x)?;
    if trace.last().is_none_or(|t| t.iteration != st.iter) {
        trace.push(TracePoint { iteration: st.iter, q: objective, kind: StepKind::Smo });
    }
    Ok(Solution {
        x: st.x,
        kkt,
        status,
        iterations: st.iter,
        cycles: None,
        objective,
        trace,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Matrix;

    fn toy(upper: f64) -> QpProblem {
        QpProblem::svm(Matrix::identity(2), vec![1.0, -1.0], upper).unwrap()
    }

    #[test]
    fn toy_selection() {
        let p = toy(1.0);
        let st = SmoState::new(&p, vec![0.0, 0.0]).unwrap();
        let sel = gsmo_select(&st, &p, 1e-9).unwrap();
        assert_eq!((sel.i, sel.j), (0, 1));
        assert_eq!(sel.lambda, 1.0);
        assert_eq!(sel.model, -1.0);
    }

    #[test]
    fn optimal_point_selects_nothing() {
        let p = toy(f64::INFINITY);
        let st = SmoState::new(&p, vec![1.0, 1.0]).unwrap();
        assert!(gsmo_select(&st, &p, 1e-9).is_none());
    }

    #[test]
    fn toy_step_and_zero_step() {
        let p = toy(1.0);
        let mut st = SmoState::new(&p, vec![0.0, 0.0]).unwrap();
        smo_step(&mut st, &p, 0, 1, 1.0, 1e-9).unwrap();
        assert_eq!(st.x, vec![1.0, 1.0]);
        assert_eq!(st.g, vec![0.0, 0.0]);

        let before = st.clone();
        smo_step(&mut st, &p, 0, 1, 0.0, 1e-9).unwrap();
        assert_eq!(st.x, before.x);
        assert_eq!(st.g, before.g);
        assert_eq!(st.iter, before.iter + 1);
    }

    #[test]
    fn step_outside_box_is_rejected() {
        let p = toy(1.0);
        let mut st = SmoState::new(&p, vec![0.0, 0.0]).unwrap();
        assert!(smo_step(&mut st, &p, 0, 1, 2.0, 1e-9).is_err());
    }

    #[test]
    fn gsmo_toy_converges_in_one_step() {
        let p = toy(f64::INFINITY);
        let sol = solve_gsmo(&p, &SmoOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Converged);
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.x, vec![1.0, 1.0]);
    }

    #[test]
    fn rsmo_at_optimum_stops_immediately() {
        let p = toy(f64::INFINITY);
        let sol = solve_rsmo_from(&p, vec![1.0, 1.0], &SmoOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Converged);
        assert_eq!(sol.iterations, 0);
    }
}
