//! Cycling active-set method with Cholesky updates.
//!
//! Each outer cycle is a Newton sweep followed by an up-cycle:
//!
//! * the sweep factors `H_KK` once, then takes equality-constrained Newton
//!   steps on the inactive set `K`; whenever a step is cut short by a bound,
//!   the blocking index moves to the active set and the factor is downdated
//!   in O(|K|²) (see [`crate::linalg::CholFactor::delete_index`]);
//! * the up-cycle frees active variables with cheap two-index (or
//!   multi-index) feasible descent steps until the inactive set has grown by
//!   half, `n` steps have been taken, or no such step exists.
//!
//! When the up-cycle cannot take its very first step the iterate is optimal.

mod newton;
mod start;
mod upcycle;

use alloc::vec;
use alloc::vec::Vec;

pub use newton::newton_sweep;
pub use start::starting_point;
pub use upcycle::{
    line_search, reduced_direction, up_cycle, upcycle_direction, DirectionKind, LineSearch,
    UpCycleOutcome, UpCycleStep,
};

use crate::linalg::CholFactor;
use crate::matrix::norm1;
use crate::qp::{active_partition, ActivePartition};
use crate::{Diagnostics, QpProblem, Result, Solution, Status, StepKind, TracePoint};

#[derive(Clone, Debug, PartialEq)]
pub struct CmuOptions {
    /// Absolute active-set tolerance; `None` uses [`QpProblem::default_eps`].
    pub eps_active: Option<f64>,
    /// Stop once the relative KKT residual after a sweep is at most this.
    pub kkt_tol: f64,
    /// Largest inactive set the first factorization may see.
    pub inactive_cap: usize,
    /// Diagonal shift added before factoring; `None` uses `1e-12·trace/m`.
    pub reg: Option<f64>,
    pub refine_steps: usize,
    /// Safety limit on outer cycles.
    pub max_cycles: usize,
    /// Evaluate `q` (compensated, O(n²)) after every step and keep a trace.
    pub track_objective: bool,
}

impl Default for CmuOptions {
    fn default() -> Self {
        Self {
            eps_active: None,
            kkt_tol: 1e-10,
            inactive_cap: 2000,
            reg: None,
            refine_steps: 2,
            max_cycles: 100,
            track_objective: true,
        }
    }
}

impl CmuOptions {
    pub fn eps_for(&self, p: &QpProblem) -> f64 {
        self.eps_active.unwrap_or_else(|| p.default_eps())
    }
}

/// Mutable state of one CMU solve.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub x: Vec<f64>,
    /// `Hx − c`, refreshed from scratch at every sweep step and up-cycle entry.
    pub g: Vec<f64>,
    pub part: ActivePartition,
    /// Factor left over from the last sweep (of `H_KK + reg·I`).
    pub factor: Option<CholFactor>,
    /// Number of Cholesky factorizations.
    pub cycles: usize,
    pub inner_iterations: usize,
    pub q_trace: Vec<TracePoint>,
    pub diagnostics: Diagnostics,
    eps: f64,
    track: bool,
    last_q: f64,
}

impl SolverState {
    pub fn new(p: &QpProblem, x: Vec<f64>, eps: f64, track: bool) -> Self {
        let mut g = vec![0.0; p.dim()];
        p.gradient_into(&x, &mut g);
        let part = active_partition(&x, p.upper(), eps);
        let mut st = Self {
            x,
            g,
            part,
            factor: None,
            cycles: 0,
            inner_iterations: 0,
            q_trace: Vec::new(),
            diagnostics: Diagnostics::default(),
            eps,
            track,
            last_q: f64::NAN,
        };
        st.check_feasibility(p);
        if track {
            let q = p.objective(&st.x).unwrap_or(f64::NAN);
            st.last_q = q;
            st.q_trace.push(TracePoint { iteration: 0, q, kind: StepKind::Start });
        }
        st
    }

    #[inline]
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub(crate) fn refresh_gradient(&mut self, p: &QpProblem) {
        p.gradient_into(&self.x, &mut self.g);
    }

    pub(crate) fn refresh_partition(&mut self, p: &QpProblem) {
        self.part = active_partition(&self.x, p.upper(), self.eps);
    }

    fn check_feasibility(&mut self, p: &QpProblem) {
        let (eq, bound) = p.feasibility_violation(&self.x);
        self.diagnostics.record_iterate(eq, norm1(&self.x), bound);
    }

    /// Bookkeeping after an accepted step.
    pub(crate) fn record_step(&mut self, p: &QpProblem, kind: StepKind) {
        self.inner_iterations += 1;
        match kind {
            StepKind::Newton => self.diagnostics.newton_steps += 1,
            StepKind::UpCycle => self.diagnostics.upcycle_steps += 1,
            _ => {}
        }
        self.check_feasibility(p);
        if self.track {
            let q = p.objective(&self.x).unwrap_or(f64::NAN);
            if self.diagnostics.record_change(self.last_q, q) {
                match kind {
                    StepKind::Newton => self.diagnostics.newton_increases += 1,
                    StepKind::UpCycle => self.diagnostics.upcycle_increases += 1,
                    _ => {}
                }
            }
            self.last_q = q;
            self.q_trace.push(TracePoint { iteration: self.inner_iterations, q, kind });
        }
    }
}

/// Runs CMU from the constructed starting point until the up-cycle certifies
/// optimality, the relative KKT residual drops below `kkt_tol`, or
/// `max_cycles` outer cycles have run.
pub fn solve_cmu(p: &QpProblem, opts: &CmuOptions) -> Result<Solution> {
    let eps = opts.eps_for(p);
    let x0 = starting_point(p, opts)?;
    let mut st = SolverState::new(p, x0, eps, opts.track_objective);

    let mut outer = 0;
    let status = loop {
        if outer >= opts.max_cycles {
            break Status::IterationLimit;
        }
        outer += 1;
        newton_sweep(p, &mut st, opts)?;
        let kkt = p.kkt_report(&st.x, eps)?;
        if kkt.rel_residual <= opts.kkt_tol {
            break Status::Converged;
        }
        if up_cycle(p, &mut st, opts)?.optimal {
            break Status::Converged;
        }
    };

    let kkt = p.kkt_report(&st.x, eps)?;
    let objective = p.objective(&st.x)?;
    Ok(Solution {
        x: st.x,
        kkt,
        status,
        iterations: st.inner_iterations,
        cycles: Some(st.cycles),
        objective,
        trace: st.q_trace,
        diagnostics: st.diagnostics,
    })
}
