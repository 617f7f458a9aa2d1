//! Sampling of the discrepancy curve `α ↦ ‖A x_α − b‖`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linop::{normal_equation_solve, LinearOperator};
use crate::vecops::dist;

/// `(α, ‖A x_α − b‖)` for each `α` of a positive, strictly ascending grid.
pub fn sample_discrepancy_curve<Op: LinearOperator + ?Sized>(
    op: &Op,
    b: &[f64],
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if grid.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::InvalidConfig("alpha grid must be positive"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig(
            "alpha grid must be strictly ascending",
        ));
    }
    grid.iter()
        .map(|&alpha| {
            let x = normal_equation_solve(op, b, alpha)?;
            Ok((alpha, dist(&op.apply(&x), b)))
        })
        .collect()
}

/// `n ≥ 2` logarithmically spaced points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![lo];
    }
    let (l, h) = (libm::log(lo), libm::log(hi));
    (0..n)
        .map(|i| libm::exp(l + (h - l) * i as f64 / (n - 1) as f64))
        .collect()
}
