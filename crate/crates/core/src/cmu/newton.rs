//! Newton sweep on the inactive set with factor downdates.

use alloc::vec::Vec;

use super::{CmuOptions, SolverState};
use crate::linalg::CholFactor;
use crate::matrix::{dot, dot_compensated};
use crate::{Error, QpProblem, Result, StepKind};

/// Factors `H_KK + reg·I` once, then repeats equality-constrained Newton
/// steps on `K`:
///
/// ```text
/// [u, v] = H_KK⁻¹ [(c − Hx)_K, z_K],   η = z_Kᵀu / z_Kᵀv,   Δx_K = u − ηv
/// ```
///
/// A step cut short by a bound moves exactly one blocking index (the smallest
/// on ties) into the active set and deletes it from the factor; a full step
/// ends the sweep with `g̃_K ≈ 0`. A direction that fails to descend also
/// ends the sweep. Does nothing when `K = ∅`.
pub fn newton_sweep(p: &QpProblem, st: &mut SolverState, opts: &CmuOptions) -> Result<()> {
    st.refresh_partition(p);
    let k0 = st.part.inactive.clone();
    if k0.is_empty() {
        st.factor = None;
        return Ok(());
    }
    let h = p.hessian();
    let z = p.labels();
    let c = p.upper();

    // Unregularized H_KK, kept in step with the factor for the refinement
    // residuals.
    let mut hk = h.principal_submatrix(&k0);
    let mut hkk = hk.clone();
    let reg = opts
        .reg
        .unwrap_or_else(|| crate::linalg::default_regularization(&hkk));
    hkk.add_diagonal(reg);
    let mut factor = CholFactor::new(&hkk, k0)?;
    st.cycles += 1;

    let mut u = Vec::new();
    let mut v = Vec::new();
    let mut rhs_u = Vec::new();
    let mut zk = Vec::new();
    let mut dx = Vec::new();
    loop {
        let kk: Vec<usize> = factor.index_map().to_vec();
        let m = kk.len();
        rhs_u.resize(m, 0.0);
        p.gradient_rows_compensated(&st.x, &kk, &mut rhs_u);
        for r in rhs_u.iter_mut() {
            *r = -*r;
        }
        zk.clear();
        zk.extend(kk.iter().map(|&k| z[k]));

        // Refinement residuals in compensated arithmetic: with |x| ~ 1e12 a
        // plain residual is pure rounding noise.
        let apply = |w: &[f64], out: &mut [f64]| {
            for (a, o) in out.iter_mut().enumerate() {
                *o = dot_compensated(hk.row(a), w);
            }
        };
        u.resize(m, 0.0);
        v.resize(m, 0.0);
        factor.solve_refined(&apply, &rhs_u, &mut u, opts.refine_steps)?;
        factor.solve_refined(&apply, &zk, &mut v, opts.refine_steps)?;

        let zv = dot(&zk, &v);
        if !(zv > 0.0) {
            return Err(Error::NonPositiveCurvature(zv));
        }
        let eta = dot(&zk, &u) / zv;
        dx.clear();
        dx.extend(u.iter().zip(&v).map(|(ui, vi)| ui - eta * vi));

        // Largest step ≤ 1 keeping x_K in the box.
        let mut t = 1.0;
        let mut blocker: Option<usize> = None;
        for (a, &k) in kk.iter().enumerate() {
            let d = dx[a];
            let ratio = if d < 0.0 {
                st.x[k] / -d
            } else if d > 0.0 && c.is_finite() {
                (c - st.x[k]) / d
            } else {
                continue;
            };
            let ratio = ratio.max(0.0);
            let better = match blocker {
                None => ratio <= t,
                Some(b) => ratio < t || (ratio == t && k < kk[b]),
            };
            if better {
                t = ratio;
                blocker = Some(a);
            }
        }

        // gᵀΔx in compensated arithmetic; a nearly singular H_KK can return
        // a direction that does not descend.
        let slope = -dot_compensated(&rhs_u, &dx);
        if slope == 0.0 {
            // Already stationary on K.
            break;
        }
        if !(slope < 0.0) {
            st.diagnostics.newton_rejected += 1;
            break;
        }

        for (a, &k) in kk.iter().enumerate() {
            st.x[k] = (st.x[k] + t * dx[a]).clamp(0.0, c);
        }
        if let Some(a) = blocker {
            st.x[kk[a]] = if dx[a] < 0.0 { 0.0 } else { c };
        }
        // Rounding x_K + tΔx at |x| ~ 1e12 drifts zᵀx by ~1e-4 per step.
        let free: Vec<usize> = kk.iter().enumerate().filter(|&(a, _)| Some(a) != blocker).map(|(_, &k)| k).collect();
        let eps = st.eps();
        p.restore_equality(&mut st.x, &free, eps);
        match blocker {
            Some(a) => {
                factor.delete_index(a)?;
                hk.remove_row_col(a);
                st.record_step(p, StepKind::Newton);
                if factor.dim() == 0 {
                    break;
                }
            }
            None => {
                st.record_step(p, StepKind::Newton);
                break;
            }
        }
    }

    st.factor = if factor.dim() > 0 { Some(factor) } else { None };
    st.refresh_gradient(p);
    st.refresh_partition(p);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::qp::active_partition;
    use crate::Matrix;

    #[test]
    fn toy_newton_step() {
        let p = QpProblem::svm(Matrix::identity(2), vec![1.0, -1.0], f64::INFINITY).unwrap();
        let mut st = SolverState::new(&p, vec![0.2, 0.2], 1e-9, true);
        let opts = CmuOptions { reg: Some(0.0), ..CmuOptions::default() };
        newton_sweep(&p, &mut st, &opts).unwrap();
        assert!((st.x[0] - 1.0).abs() < 1e-15 && (st.x[1] - 1.0).abs() < 1e-15);
        assert_eq!(st.cycles, 1);
        assert_eq!(st.inner_iterations, 1);
    }

    #[test]
    fn fixed_point_takes_zero_step() {
        let p = QpProblem::svm(Matrix::identity(2), vec![1.0, -1.0], f64::INFINITY).unwrap();
        let mut st = SolverState::new(&p, vec![1.0, 1.0], 1e-9, true);
        newton_sweep(&p, &mut st, &CmuOptions::default()).unwrap();
        assert_eq!(st.x, vec![1.0, 1.0]);
        assert_eq!(st.inner_iterations, 0);
        assert_eq!(st.diagnostics.newton_rejected, 0);
    }

    #[test]
    fn empty_inactive_set_skips_factorization() {
        let p = QpProblem::svm(Matrix::identity(2), vec![1.0, -1.0], 1.0).unwrap();
        let mut st = SolverState::new(&p, vec![0.0, 0.0], 1e-9, true);
        newton_sweep(&p, &mut st, &CmuOptions::default()).unwrap();
        assert_eq!(st.cycles, 0);
        assert!(st.factor.is_none());
    }

    #[test]
    fn blocked_step_activates_one_index_and_downdates() {
        // Unconstrained restricted minimizer has x₀ < 0, so index 0 blocks.
        let h = Matrix::from_rows(&[[1.0, 0.9, 0.0], [0.9, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let p = QpProblem::svm(h, vec![1.0, 1.0, -1.0], f64::INFINITY).unwrap();
        let mut st = SolverState::new(&p, vec![0.1, 0.4, 0.5], 1e-9, true);
        newton_sweep(&p, &mut st, &CmuOptions::default()).unwrap();
        let (eq, bound) = p.feasibility_violation(&st.x);
        assert!(eq < 1e-12 && bound == 0.0);
        let part = active_partition(&st.x, p.upper(), 1e-9);
        let kkt = p.kkt_report(&st.x, 1e-9).unwrap();
        assert!(kkt.grad_norm_k < 1e-10, "{kkt:?}");
        if let Some(f) = &st.factor {
            assert_eq!(f.index_map(), part.inactive.as_slice());
        }
        let q: Vec<f64> = st.q_trace.iter().map(|t| t.q).collect();
        assert!(q.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
