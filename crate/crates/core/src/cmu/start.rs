//! Starting point construction.

use alloc::vec;
use alloc::vec::Vec;

use super::upcycle::{apply_step, search_along};
use super::CmuOptions;
use crate::qp::project_nullspace;
use crate::{QpProblem, Result};

/// Line search from `0` along `s = Π_N c`.
///
/// If every variable ends up inactive and `n` exceeds `inactive_cap`, the
/// search is redone along a direction supported on the `inactive_cap`
/// indices with the largest `xᵢ − (Π_N ∇q(x))ᵢ`, so that the first
/// factorization stays at most `inactive_cap` wide.
pub fn starting_point(p: &QpProblem, opts: &CmuOptions) -> Result<Vec<f64>> {
    let n = p.dim();
    let z = p.labels();
    let s = project_nullspace(z, p.linear())?;
    let zero = vec![0.0; n];
    let g0: Vec<f64> = p.linear().iter().map(|c| -c).collect();
    let all: Vec<usize> = (0..n).filter(|&i| s[i] != 0.0).collect();
    let ls = search_along(p, &zero, &g0, &s, &all)?;
    let mut x = zero.clone();
    apply_step(p, &mut x, &s, &all, &ls);

    let cap = opts.inactive_cap.max(2);
    if ls.blocker.is_some() || n <= cap {
        return Ok(x);
    }

    let grad = p.gradient(&x)?;
    let pg = project_nullspace(z, &grad)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (x[a] - pg[a], x[b] - pg[b]);
        sb.total_cmp(&sa).then(a.cmp(&b))
    });
    let mut chosen: Vec<usize> = order[..cap].to_vec();

    // Both classes must be present for a nonzero direction with z_Pᵀd = 0.
    for label in [1.0, -1.0] {
        if !chosen.iter().any(|&i| z[i] == label) {
            if let Some(&extra) = order[cap..].iter().find(|&&i| z[i] == label) {
                chosen.pop();
                chosen.push(extra);
            }
        }
    }
    chosen.sort_unstable();

    // Restriction of x to the chosen indices, rebalanced so that z_Pᵀd = 0
    // while staying nonnegative: the heavier class is scaled down.
    let pos: f64 = chosen.iter().filter(|&&i| z[i] > 0.0).map(|&i| x[i]).sum();
    let neg: f64 = chosen.iter().filter(|&&i| z[i] < 0.0).map(|&i| x[i]).sum();
    let (scale_pos, scale_neg) = if pos > neg { (neg / pos, 1.0) } else { (1.0, pos / neg) };
    let mut d = vec![0.0; n];
    for &i in &chosen {
        d[i] = x[i] * if z[i] > 0.0 { scale_pos } else { scale_neg };
    }
    let support: Vec<usize> = chosen.into_iter().filter(|&i| d[i] > 0.0).collect();
    let ls = search_along(p, &zero, &g0, &d, &support)?;
    let mut x = zero;
    apply_step(p, &mut x, &d, &support, &ls);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp::active_partition;
    use crate::Matrix;

    #[test]
    fn balanced_labels_give_all_ones_direction() {
        let z = vec![1.0, -1.0, 1.0, -1.0];
        let s = project_nullspace(&z, &[1.0; 4]).unwrap();
        assert_eq!(s, vec![1.0; 4]);
    }

    #[test]
    fn toy_start_is_the_optimum() {
        let p = QpProblem::svm(Matrix::identity(2), vec![1.0, -1.0], f64::INFINITY).unwrap();
        assert_eq!(starting_point(&p, &CmuOptions::default()).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn cap_limits_initial_inactive_set() {
        let n = 12;
        let z: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        let h = Matrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { 0.1 * z[i] * z[j] });
        let p = QpProblem::svm(h, z.clone(), f64::INFINITY).unwrap();
        let opts = CmuOptions { inactive_cap: 5, ..CmuOptions::default() };
        let x = starting_point(&p, &opts).unwrap();
        let part = active_partition(&x, p.upper(), 1e-9);
        assert!(part.inactive.len() <= 5 && !part.inactive.is_empty());
        let (eq, bound) = p.feasibility_violation(&x);
        assert!(eq < 1e-12 && bound == 0.0);
        assert!(p.objective(&x).unwrap() < 0.0);

        let full = starting_point(&p, &CmuOptions::default()).unwrap();
        assert!(full.iter().all(|&v| v > 0.0));
    }
}
