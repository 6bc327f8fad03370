//! Solvers for the convex quadratic program behind kernel-SVM training:
//!
//! ```text
//! minimize   ½ xᵀHx − cᵀx
//! subject to zᵀx = 0,  0 ≤ x ≤ C
//! ```
//!
//! The main solver is [`cmu::solve_cmu`], an active-set method that alternates
//! cheap first-order "up-cycles" (which free active variables) with Newton
//! sweeps that remove inactive variables one at a time while downdating a
//! Cholesky factor in O(m²). Greedy and random SMO baselines live in [`smo`].
//!
//! The crate is `no_std` and only needs `alloc`. Dataset IO, reports and the
//! command-line harness live in the companion `svmqp` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cmu;
pub mod datagen;
mod error;
pub mod linalg;
pub mod matrix;
pub mod oracle;
pub mod qp;
pub mod smo;
mod solution;
pub mod svm;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use qp::{ActivePartition, KktReport, QpProblem};
pub use solution::{Diagnostics, Solution, Status, StepKind, TracePoint};
