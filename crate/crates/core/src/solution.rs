use alloc::vec::Vec;

use crate::KktReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    /// No improving step exists under the solver's selection rule, yet the
    /// optimality tolerance is not met.
    Stalled,
    IterationLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Start,
    UpCycle,
    Newton,
    Smo,
}

/// One objective sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub q: f64,
    pub kind: StepKind,
}

/// Per-run invariant bookkeeping.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// Largest `|zᵀx| / max(1, ‖x‖₁)` over accepted iterates.
    pub max_equality_violation: f64,
    /// Largest excursion outside `[0, C]` over accepted iterates.
    pub max_bound_violation: f64,
    /// Up-cycle directions checked for `zᵀs = 0`, `σ∘s ≥ 0`, `gᵀs < 0`.
    pub directions_checked: usize,
    pub direction_violations: usize,
    pub newton_steps: usize,
    /// Newton steps after which the evaluated objective rose by more than
    /// `1e-12 · max(1, |q|)`.
    pub newton_increases: usize,
    /// Newton directions discarded as not descending.
    pub newton_rejected: usize,
    pub upcycle_steps: usize,
    pub upcycle_increases: usize,
    /// SMO objective samples (one per check period) that rose.
    pub smo_increases: usize,
    /// Largest relative objective increase seen on any step.
    pub max_relative_increase: f64,
    /// Number of from-scratch gradient refreshes (SMO).
    pub gradient_refreshes: usize,
}

impl Diagnostics {
    pub(crate) fn record_iterate(&mut self, eq: f64, x_l1: f64, bound: f64) {
        self.max_equality_violation = self.max_equality_violation.max(eq / x_l1.max(1.0));
        self.max_bound_violation = self.max_bound_violation.max(bound);
    }

    /// Records a step's objective change and returns whether it counts as an
    /// increase.
    pub(crate) fn record_change(&mut self, before: f64, after: f64) -> bool {
        let scale = before.abs().max(1.0);
        let rel = (after - before) / scale;
        if rel > self.max_relative_increase {
            self.max_relative_increase = rel;
        }
        rel > 1e-12
    }
}

/// Output shared by every solver.
#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    pub kkt: KktReport,
    pub status: Status,
    /// CMU: up-cycle steps plus Newton steps. SMO: executed pair steps.
    pub iterations: usize,
    /// Cholesky factorizations (CMU only).
    pub cycles: Option<usize>,
    pub objective: f64,
    pub trace: Vec<TracePoint>,
    pub diagnostics: Diagnostics,
}

impl Solution {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}
