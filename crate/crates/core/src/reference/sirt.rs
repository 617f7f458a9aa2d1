//! Simultaneous iterative reconstruction `x ← x + C Aᵀ R (b − Ax)` with
//! `R`, `C` the inverse row and column sums of `A`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linop::{LinearOperator, Matrix};
use crate::trace::{SolveOutcome, SolveTrace, TraceRecord};
use crate::vecops::norm;

#[derive(Debug, Clone, PartialEq)]
pub struct SirtWeights {
    /// Diagonal of `R`.
    pub row: Vec<f64>,
    /// Diagonal of `C`.
    pub col: Vec<f64>,
    /// Set when `A` has negative entries and absolute sums were used.
    pub absolute: bool,
}

/// Inverse row and column sums. Sums of absolute values are used when `A`
/// has any negative entry; a vanishing sum is an error.
pub fn sirt_weights(a: &Matrix) -> Result<SirtWeights> {
    let mut absolute = false;
    a.for_each_entry(|_, _, v| absolute |= v < 0.0);
    let mut row = vec![0.0; a.nrows()];
    let mut col = vec![0.0; a.ncols()];
    a.for_each_entry(|i, j, v| {
        let v = if absolute { v.abs() } else { v };
        row[i] += v;
        col[j] += v;
    });
    for (kind, sums) in [("row", &mut row), ("column", &mut col)] {
        for (index, s) in sums.iter_mut().enumerate() {
            if *s == 0.0 || !s.is_finite() {
                return Err(Error::ZeroSum { kind, index });
            }
            *s = 1.0 / *s;
        }
    }
    Ok(SirtWeights { row, col, absolute })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirtConfig {
    pub max_iter: usize,
    /// Stop as soon as `‖Ax − b‖ ≤ ε`.
    pub stop_at_discrepancy: bool,
}

impl Default for SirtConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            stop_at_discrepancy: true,
        }
    }
}

/// Runs SIRT from `x₀ = 0`. `converged` reports whether the discrepancy
/// was reached, which is only checked when `stop_at_discrepancy` is set.
pub fn sirt_solve(a: &Matrix, b: &[f64], target: f64, cfg: &SirtConfig) -> Result<SolveOutcome> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let w = sirt_weights(a)?;
    let mut x = vec![0.0; a.ncols()];
    let mut r = b.to_vec();
    let mut records = vec![TraceRecord::new(0, norm(&r))];
    let mut converged = cfg.stop_at_discrepancy && norm(&r) <= target;
    let mut iterations = 0;

    while !converged && iterations < cfg.max_iter {
        let weighted: Vec<f64> = r.iter().zip(&w.row).map(|(ri, wi)| ri * wi).collect();
        let g = a.apply_transpose(&weighted);
        for ((xj, gj), cj) in x.iter_mut().zip(&g).zip(&w.col) {
            *xj += cj * gj;
        }
        let ax = a.apply(&x);
        for ((ri, bi), axi) in r.iter_mut().zip(b).zip(&ax) {
            *ri = bi - axi;
        }
        iterations += 1;
        let res = norm(&r);
        records.push(TraceRecord::new(iterations, res));
        converged = cfg.stop_at_discrepancy && res <= target;
    }

    Ok(SolveOutcome {
        x,
        alpha: None,
        converged,
        iterations,
        inner_iterations: iterations,
        trace: SolveTrace {
            records,
            outer: Vec::new(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::CsrMatrix;
    use crate::testutil::TestRng;
    use crate::vecops::dot;
    use nalgebra::DMatrix;

    #[test]
    fn weights_of_small_matrix() {
        let a = Matrix::Dense(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 3.0]));
        let w = sirt_weights(&a).unwrap();
        assert_eq!(w.row, [0.5, 0.25]);
        assert_eq!(w.col, [0.5, 0.25]);
        assert!(!w.absolute);
    }

    #[test]
    fn negative_entries_use_absolute_sums() {
        let a = Matrix::Dense(DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 2.0, 2.0]));
        let w = sirt_weights(&a).unwrap();
        assert!(w.absolute);
        assert_eq!(w.row, [0.5, 0.25]);
        assert_eq!(w.col, [1.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn zero_column_is_rejected() {
        let a =
            Matrix::Sparse(CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (1, 2, 1.0)]).unwrap());
        assert_eq!(
            sirt_weights(&a),
            Err(Error::ZeroSum {
                kind: "column",
                index: 1
            })
        );
    }

    #[test]
    fn identity_converges_in_one_step() {
        let a = Matrix::Dense(DMatrix::identity(3, 3));
        let b = [1.0, -2.0, 0.5];
        let cfg = SirtConfig {
            max_iter: 5,
            stop_at_discrepancy: false,
        };
        let out = sirt_solve(&a, &b, 0.0, &cfg).unwrap();
        assert_eq!(out.iterations, 5);
        assert_eq!(out.trace.records[1].res_norm, 0.0);
        assert_eq!(out.x, b);
    }

    #[test]
    fn consistent_solution_is_fixed_point() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.5, 1.0, 3.0, 0.25]);
        let x = [0.7, -0.4];
        let b = a.apply(&x);
        let m = Matrix::Dense(a);
        let w = sirt_weights(&m).unwrap();
        let weighted: Vec<f64> = b
            .iter()
            .zip(&m.apply(&x))
            .zip(&w.row)
            .map(|((bi, ai), r)| (bi - ai) * r)
            .collect();
        assert!(norm(&m.apply_transpose(&weighted)) < 1e-15);
    }

    /// `‖r‖_R = √(rᵀRr)`
    fn weighted_norm(r: &[f64], w: &[f64]) -> f64 {
        let rw: Vec<f64> = r.iter().zip(w).map(|(a, b)| a * b).collect();
        libm::sqrt(dot(r, &rw))
    }

    #[test]
    fn weighted_residual_is_nonincreasing() {
        let mut rng = TestRng::new(77);
        let a = DMatrix::from_fn(30, 20, |_, _| rng.unit());
        let b: Vec<f64> = (0..30).map(|_| rng.unit()).collect();
        let m = Matrix::Dense(a);
        let w = sirt_weights(&m).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..40 {
            let cfg = SirtConfig {
                max_iter: k,
                stop_at_discrepancy: false,
            };
            let out = sirt_solve(&m, &b, 0.0, &cfg).unwrap();
            let r: Vec<f64> = m
                .apply(&out.x)
                .iter()
                .zip(&b)
                .map(|(ax, bi)| bi - ax)
                .collect();
            let wr = weighted_norm(&r, &w.row);
            assert!(wr <= prev * (1.0 + 1e-12));
            prev = wr;
        }
    }

    #[test]
    fn stops_at_discrepancy() {
        let mut rng = TestRng::new(5);
        let a = DMatrix::from_fn(20, 10, |_, _| rng.unit());
        let x: Vec<f64> = (0..10).map(|_| rng.unit()).collect();
        let b = a.apply(&x);
        let target = 0.05 * norm(&b);
        let out = sirt_solve(&Matrix::Dense(a), &b, target, &SirtConfig::default()).unwrap();
        assert!(out.converged);
        assert!(out.trace.records.last().unwrap().res_norm <= target);
        assert!(out.trace.records[out.iterations - 1].res_norm > target);
    }
}
