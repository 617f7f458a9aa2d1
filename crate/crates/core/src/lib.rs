//! Newton-type solvers for Tikhonov regularization with the regularization
//! parameter chosen by the discrepancy principle.
//!
//! The crate is `no_std` (it needs `alloc`) and holds the numerical core:
//! linear operators, synthetic test problems, Golub–Kahan
//! bidiagonalization, the full-space and projected Newton solvers, the
//! reference methods they are compared against and image quality metrics.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bidiag;
pub mod curve;
pub mod error;
pub mod linop;
pub mod metrics;
pub mod ntm;
pub mod pntm;
pub mod problems;
pub mod reference;
pub mod trace;
pub mod vecops;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use linop::{CsrMatrix, DifferenceMatrix, LinearOperator, Matrix, Priorconditioned};
pub use problems::InverseProblem;
pub use trace::{SolveOutcome, SolveTrace, TraceRecord};
