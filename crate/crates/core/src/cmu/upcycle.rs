//! First-order steps that turn active variables inactive.

use alloc::vec;
use alloc::vec::Vec;

use super::{CmuOptions, SolverState};
use crate::matrix::{axpy, check_len, dot, norm1};
use crate::qp::{multiplier_mu, project_tangent_cone, ActivePartition};
use crate::{Error, QpProblem, Result, StepKind};

/// `g̃ = g − μz` and `s̃ = Π_{B,x}(−g̃)` at `x`.
///
/// `s̃ = 0` exactly when `x` is optimal.
pub fn reduced_direction(
    p: &QpProblem,
    x: &[f64],
    g: &[f64],
    part: &ActivePartition,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len(p.dim(), x.len())?;
    let z = p.labels();
    let mu = multiplier_mu(g, z, part)?;
    let gt: Vec<f64> = g.iter().zip(z).map(|(gi, zi)| gi - mu * zi).collect();
    let neg: Vec<f64> = gt.iter().map(|v| -v).collect();
    let st = project_tangent_cone(x, &neg, p.upper(), part.eps)?;
    Ok((gt, st))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectionKind {
    /// Both `I` and `J` nonempty: every index of `I ∪ J` moves off its bound.
    Case1,
    /// One active index `i` paired with a partner `j`.
    Case2 { i: usize, j: usize },
    /// No feasible descent direction of the up-cycle form exists.
    Fail,
}

/// A feasible search direction for the up-cycle; `support` lists the nonzero
/// entries of `s` in increasing order.
#[derive(Clone, Debug, PartialEq)]
pub struct UpCycleStep {
    pub kind: DirectionKind,
    pub s: Vec<f64>,
    pub support: Vec<usize>,
}

impl UpCycleStep {
    fn fail(n: usize) -> Self {
        Self { kind: DirectionKind::Fail, s: vec![0.0; n], support: Vec::new() }
    }
}

/// Builds the up-cycle direction from `g̃` and `s̃`.
///
/// With `I = {i ∈ A : zᵢs̃ᵢ > 0}` and `J = {i ∈ A : zᵢs̃ᵢ < 0}`:
/// if both are nonempty, `s_I = −v₂s̃_I`, `s_J = v₁s̃_J` with `v₁ = z_Iᵀs̃_I`,
/// `v₂ = z_Jᵀs̃_J`. If exactly one is nonempty, `i` maximizes `|s̃ᵢ|` over `A`
/// and `j` maximizes `sign(s̃ᵢ)zᵢzⱼg̃ⱼ` over `{j : σᵢσⱼzᵢzⱼ ≤ 0}`, giving
/// `s = sign(s̃ᵢ)(eᵢ − zᵢzⱼeⱼ)`, rejected unless `g̃ᵀs < 0`.
pub fn upcycle_direction(gt: &[f64], st: &[f64], z: &[f64], part: &ActivePartition) -> UpCycleStep {
    let n = gt.len();
    let mut v1 = 0.0;
    let mut v2 = 0.0;
    let mut has_i = false;
    let mut has_j = false;
    for &a in &part.active {
        let t = z[a] * st[a];
        if t > 0.0 {
            v1 += t;
            has_i = true;
        } else if t < 0.0 {
            v2 += t;
            has_j = true;
        }
    }

    if has_i && has_j {
        let mut s = vec![0.0; n];
        let mut support = Vec::new();
        for &a in &part.active {
            let t = z[a] * st[a];
            if t > 0.0 {
                s[a] = -v2 * st[a];
                support.push(a);
            } else if t < 0.0 {
                s[a] = v1 * st[a];
                support.push(a);
            }
        }
        return UpCycleStep { kind: DirectionKind::Case1, s, support };
    }
    if !has_i && !has_j {
        return UpCycleStep::fail(n);
    }

    // Case 2. Ties go to the smallest index.
    let mut i = usize::MAX;
    let mut best = 0.0;
    for &a in &part.active {
        if st[a].abs() > best {
            best = st[a].abs();
            i = a;
        }
    }
    let sign_i = st[i].signum();
    let (si, zi) = (f64::from(part.sigma[i]), z[i]);
    let mut j = usize::MAX;
    let mut best = f64::NEG_INFINITY;
    for b in 0..n {
        if si * f64::from(part.sigma[b]) * zi * z[b] > 0.0 {
            continue;
        }
        let score = sign_i * zi * z[b] * gt[b];
        if score > best {
            best = score;
            j = b;
        }
    }
    if j == usize::MAX {
        return UpCycleStep::fail(n);
    }
    let mut s = vec![0.0; n];
    s[i] = sign_i;
    s[j] = -sign_i * zi * z[j];
    if gt[i] * s[i] + gt[j] * s[j] >= 0.0 {
        return UpCycleStep::fail(n);
    }
    let support = if i < j { vec![i, j] } else { vec![j, i] };
    UpCycleStep { kind: DirectionKind::Case2 { i, j }, s, support }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineSearch {
    pub lambda: f64,
    /// Unconstrained minimizer `−gᵀs / sᵀHs`.
    pub lambda_hat: f64,
    /// Largest step keeping `x + λs` in the box (may be infinite).
    pub lambda_max: f64,
    pub hit_bound: bool,
    /// Index that reaches its bound first when `hit_bound` (smallest on ties).
    pub blocker: Option<usize>,
    pub x_next: Vec<f64>,
}

/// Exact line search along a feasible descent direction, capped at the box.
pub fn line_search(p: &QpProblem, x: &[f64], s: &[f64]) -> Result<LineSearch> {
    check_len(p.dim(), x.len())?;
    check_len(p.dim(), s.len())?;
    let g = p.gradient(x)?;
    let support: Vec<usize> = (0..s.len()).filter(|&i| s[i] != 0.0).collect();
    let ls = search_along(p, x, &g, s, &support)?;
    let mut x_next = x.to_vec();
    apply_step(p, &mut x_next, s, &support, &ls);
    Ok(LineSearch {
        lambda: ls.lambda,
        lambda_hat: ls.lambda_hat,
        lambda_max: ls.lambda_max,
        hit_bound: ls.blocker.is_some(),
        blocker: ls.blocker,
        x_next,
    })
}

pub(crate) struct StepLength {
    pub lambda: f64,
    pub lambda_hat: f64,
    pub lambda_max: f64,
    pub blocker: Option<usize>,
}

pub(crate) fn search_along(
    p: &QpProblem,
    x: &[f64],
    g: &[f64],
    s: &[f64],
    support: &[usize],
) -> Result<StepLength> {
    let slope: f64 = support.iter().map(|&a| g[a] * s[a]).sum();
    let curv = p.curvature_on(s, support);
    if !(curv > 0.0) {
        return Err(Error::NonPositiveCurvature(curv));
    }
    if !(slope < 0.0) {
        return Err(Error::NotDescent(slope));
    }
    let lambda_hat = -slope / curv;
    let c = p.upper();
    let mut lambda_max = f64::INFINITY;
    let mut blocker = None;
    for &a in support {
        let ratio = if s[a] > 0.0 {
            (c - x[a]) / s[a]
        } else {
            -x[a] / s[a]
        };
        if ratio < lambda_max {
            lambda_max = ratio.max(0.0);
            blocker = Some(a);
        }
    }
    let (lambda, blocker) = if lambda_max <= lambda_hat {
        (lambda_max, blocker)
    } else {
        (lambda_hat, None)
    };
    Ok(StepLength { lambda, lambda_hat, lambda_max, blocker })
}

/// `x ← x + λs`, snapping the blocking coordinate exactly onto its bound.
pub(crate) fn apply_step(p: &QpProblem, x: &mut [f64], s: &[f64], support: &[usize], ls: &StepLength) {
    for &a in support {
        x[a] += ls.lambda * s[a];
    }
    if let Some(b) = ls.blocker {
        x[b] = if s[b] > 0.0 { p.upper() } else { 0.0 };
    }
    // Guard against rounding just outside the box.
    let c = p.upper();
    for &a in support {
        x[a] = x[a].clamp(0.0, c);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UpCycleOutcome {
    pub steps: usize,
    /// The very first direction failed: the iterate is optimal.
    pub optimal: bool,
}

/// Repeats direction / line search until a direction fails, `n` steps have
/// been taken, or `|K|` reaches `min(n, max(100, ⌈1.5·|K_entry|⌉))`.
pub fn up_cycle(p: &QpProblem, st: &mut SolverState, _opts: &CmuOptions) -> Result<UpCycleOutcome> {
    let n = p.dim();
    let z = p.labels();
    st.refresh_gradient(p);
    st.refresh_partition(p);
    let k_entry = st.part.inactive.len();
    let cap = n.min(100usize.max((3 * k_entry).div_ceil(2)));

    let mut steps = 0;
    loop {
        let (gt, sd) = reduced_direction(p, &st.x, &st.g, &st.part)?;
        let dir = upcycle_direction(&gt, &sd, z, &st.part);
        if dir.kind == DirectionKind::Fail {
            return Ok(UpCycleOutcome { steps, optimal: steps == 0 });
        }
        check_direction(st, z, &dir);

        let ls = search_along(p, &st.x, &st.g, &dir.s, &dir.support)?;
        apply_step(p, &mut st.x, &dir.s, &dir.support, &ls);
        let h = p.hessian();
        for &a in &dir.support {
            axpy(ls.lambda * dir.s[a], h.row(a), &mut st.g);
        }
        st.refresh_partition(p);
        let eps = st.eps();
        if let Some((k, shift)) = p.restore_equality(&mut st.x, &st.part.inactive, eps) {
            axpy(shift, h.row(k), &mut st.g);
        }
        st.record_step(p, StepKind::UpCycle);
        steps += 1;

        if steps >= n || st.part.inactive.len() >= cap {
            return Ok(UpCycleOutcome { steps, optimal: false });
        }
    }
}

fn check_direction(st: &mut SolverState, z: &[f64], dir: &UpCycleStep) {
    let zs = dot(z, &dir.s);
    let feasible_sign = dir
        .support
        .iter()
        .all(|&a| f64::from(st.part.sigma[a]) * dir.s[a] >= 0.0);
    let slope: f64 = dir.support.iter().map(|&a| st.g[a] * dir.s[a]).sum();
    st.diagnostics.directions_checked += 1;
    if zs.abs() > 1e-12 * norm1(&dir.s) || !feasible_sign || !(slope < 0.0) {
        st.diagnostics.direction_violations += 1;
    }
}
