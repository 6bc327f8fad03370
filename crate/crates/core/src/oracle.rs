//! Reference solvers used to check the production solvers.
//!
//! They share nothing with [`crate::cmu`] or [`crate::smo`] beyond
//! [`QpProblem`] accessors: [`enumerate_patterns`] tries every
//! lower/free/upper assignment and solves the resulting equality-constrained
//! system by Gaussian elimination, and [`projected_gradient`] runs an
//! accelerated projected-gradient method with an exact projection onto the
//! feasible set.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, QpProblem, Result};

/// Largest `n` accepted by [`enumerate_patterns`].
pub const MAX_ENUMERATION_DIM: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

fn objective(p: &QpProblem, x: &[f64]) -> f64 {
    let h = p.hessian();
    let c = p.linear();
    let mut q = 0.0;
    for i in 0..x.len() {
        let hx: f64 = h.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        q += x[i] * (0.5 * hx - c[i]);
    }
    q
}

/// Solves `A y = b` in place (`a` row-major `m×m`) with partial pivoting.
/// Returns `None` for a numerically singular matrix.
fn gauss_solve(a: &mut [f64], b: &mut [f64], m: usize) -> Option<()> {
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..m {
        let piv = (col..m).max_by(|&r, &s| a[r * m + col].abs().total_cmp(&a[s * m + col].abs()))?;
        if a[piv * m + col].abs() <= 1e-14 * scale {
            return None;
        }
        if piv != col {
            for k in 0..m {
                a.swap(piv * m + k, col * m + k);
            }
            b.swap(piv, col);
        }
        for r in col + 1..m {
            let f = a[r * m + col] / a[col * m + col];
            if f != 0.0 {
                for k in col..m {
                    a[r * m + k] -= f * a[col * m + k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    for col in (0..m).rev() {
        let s: f64 = (col + 1..m).map(|k| a[col * m + k] * b[k]).sum();
        b[col] = (b[col] - s) / a[col * m + col];
    }
    Some(())
}

/// Exhaustive search over bound patterns.
///
/// For every assignment of each index to lower (`0`), free or upper (`C`),
/// the free block solves
///
/// ```text
/// [H_FF  −z_F] [x_F]   [c_F − H_FU·C]
/// [z_Fᵀ    0 ] [ μ ] = [ −C·Σ_U z_U ]
/// ```
///
/// and the lowest objective among candidates that are feasible to `tol` is
/// returned. The true minimizer is the candidate of its own free set, so no
/// sign conditions are needed. Upper patterns are skipped when `C = ∞`.
pub fn enumerate_patterns(p: &QpProblem, tol: f64) -> Result<OracleSolution> {
    let n = p.dim();
    if n > MAX_ENUMERATION_DIM {
        return Err(Error::InvalidParameter("pattern enumeration is limited to 12 variables"));
    }
    let h = p.hessian();
    let c = p.linear();
    let z = p.labels();
    let cap = p.upper();
    let states: usize = if cap.is_finite() { 3 } else { 2 };
    let total = states.pow(n as u32);

    let mut pattern = vec![0u8; n];
    let mut best: Option<OracleSolution> = None;
    let mut x = vec![0.0; n];
    let mut free = Vec::with_capacity(n);
    for code in 0..total {
        let mut rem = code;
        for s in pattern.iter_mut() {
            *s = (rem % states) as u8;
            rem /= states;
        }
        free.clear();
        free.extend((0..n).filter(|&i| pattern[i] == 1));
        for i in 0..n {
            x[i] = match pattern[i] {
                2 => cap,
                _ => 0.0,
            };
        }
        if !free.is_empty() {
            let m = free.len() + 1;
            let mut a = vec![0.0; m * m];
            let mut b = vec![0.0; m];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[r * m + s] = h[(i, j)];
                }
                a[r * m + m - 1] = -z[i];
                a[(m - 1) * m + r] = z[i];
                let upper_part: f64 = (0..n).filter(|&j| pattern[j] == 2).map(|j| h[(i, j)] * cap).sum();
                b[r] = c[i] - upper_part;
            }
            b[m - 1] = -(0..n).filter(|&j| pattern[j] == 2).map(|j| z[j] * cap).sum::<f64>();
            if gauss_solve(&mut a, &mut b, m).is_none() {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                x[i] = b[r];
            }
        }
        let scale = x.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        let eq: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        let feasible = eq.abs() <= tol * scale
            && x.iter().all(|&v| v >= -tol * scale && v <= cap + tol * scale);
        if !feasible {
            continue;
        }
        let q = objective(p, &x);
        if best.as_ref().is_none_or(|b| q < b.objective) {
            best = Some(OracleSolution { x: x.clone(), objective: q });
        }
    }
    best.ok_or(Error::Infeasible("no feasible bound pattern"))
}

/// Euclidean projection onto `{x : zᵀx = 0, 0 ≤ x ≤ C}`:
/// `x = clip(y + θz)` with `θ` found by bisection on the monotone map
/// `θ ↦ zᵀclip(y + θz)`.
pub fn project_feasible(y: &[f64], z: &[f64], cap: f64) -> Vec<f64> {
    let eval = |theta: f64, out: &mut [f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..y.len() {
            out[i] = (y[i] + theta * z[i]).clamp(0.0, cap);
            s += z[i] * out[i];
        }
        s
    };
    let mut out = vec![0.0; y.len()];
    let mut width = y.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    if cap.is_finite() {
        width = width.max(cap);
    }
    let (mut lo, mut hi) = (-width, width);
    while eval(lo, &mut out) > 0.0 {
        lo *= 2.0;
    }
    while eval(hi, &mut out) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid, &mut out) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Pick the endpoint with the smaller equality residual.
    let r_lo = eval(lo, &mut out).abs();
    let r_hi = eval(hi, &mut out).abs();
    if r_lo < r_hi {
        eval(lo, &mut out);
    }
    out
}

/// Upper bound on `λ_max(H)` by power iteration, padded by 10%.
fn lipschitz(p: &QpProblem) -> f64 {
    let h = p.hessian();
    let n = p.dim();
    let mut v = vec![1.0 / libm::sqrt(n as f64); n];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = h.mul_vec(&v).expect("square");
        let nrm = libm::sqrt(w.iter().map(|a| a * a).sum());
        if nrm == 0.0 {
            break;
        }
        lambda = nrm;
        for (a, b) in v.iter_mut().zip(&w) {
            *a = b / nrm;
        }
    }
    1.1 * lambda
}

/// Accelerated projected gradient (FISTA with adaptive restart) until the
/// projected-gradient residual `L·‖x − P(x − ∇q/L)‖∞` drops below
/// `tol · max(1, ‖x‖∞)`.
pub fn projected_gradient(p: &QpProblem, tol: f64, max_iters: usize) -> Result<OracleSolution> {
    let n = p.dim();
    let z = p.labels();
    let cap = p.upper();
    let h = p.hessian();
    let c = p.linear();
    let l = lipschitz(p);
    let grad = |x: &[f64]| -> Vec<f64> {
        let mut g = h.mul_vec(x).expect("square");
        for (gi, ci) in g.iter_mut().zip(c) {
            *gi -= ci;
        }
        g
    };
    let step = |x: &[f64]| -> Vec<f64> {
        let g = grad(x);
        let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b / l).collect();
        project_feasible(&y, z, cap)
    };

    let mut x = project_feasible(&vec![0.0; n], z, cap);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut q_prev = objective(p, &x);
    for it in 0..max_iters {
        let x_next = step(&y);
        let q_next = objective(p, &x_next);
        if q_next > q_prev && t > 1.0 {
            // Restart momentum.
            y.copy_from_slice(&x);
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
        for i in 0..n {
            y[i] = x_next[i] + (t - 1.0) / t_next * (x_next[i] - x[i]);
        }
        x = x_next;
        t = t_next;
        q_prev = q_next;
        if it % 10 == 0 {
            let px = step(&x);
            let res = l * x.iter().zip(&px).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
            let scale = x.iter().fold(1.0f64, |s, v| s.max(v.abs()));
            if res <= tol * scale {
                return Ok(OracleSolution { objective: objective(p, &x), x });
            }
        }
    }
    Err(Error::InvalidParameter("projected-gradient reference did not reach its tolerance"))
}

/// [`enumerate_patterns`] when `n ≤ 12`, otherwise [`projected_gradient`] to
/// residual `1e−12`.
pub fn reference_solution(p: &QpProblem) -> Result<OracleSolution> {
    if p.dim() <= MAX_ENUMERATION_DIM {
        enumerate_patterns(p, 1e-9)
    } else {
        projected_gradient(p, 1e-12, 2_000_000)
    }
}
