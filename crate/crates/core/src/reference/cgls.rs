//! Conjugate gradients for least squares with discrepancy stopping.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linop::{LinearOperator, Priorconditioned};
use crate::trace::{SolveOutcome, SolveTrace, TraceRecord};
use crate::vecops::{axpy, dot, norm};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CglsConfig {
    pub max_iter: usize,
}

impl Default for CglsConfig {
    fn default() -> Self {
        Self { max_iter: 1000 }
    }
}

/// CGLS on `min ‖Az − b‖` from `z = 0`, stopped at the first iterate with
/// `‖Az − b‖ ≤ target`.
pub fn cgls_solve<Op: LinearOperator + ?Sized>(
    op: &Op,
    b: &[f64],
    target: f64,
    cfg: &CglsConfig,
) -> Result<SolveOutcome> {
    if b.len() != op.nrows() {
        return Err(Error::DimensionMismatch {
            expected: op.nrows(),
            found: b.len(),
        });
    }
    let mut z = vec![0.0; op.ncols()];
    let mut r = b.to_vec();
    let mut s = op.apply_transpose(&r);
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let mut res = norm(&r);
    let mut records = vec![TraceRecord::new(0, res)];
    let mut iterations = 0;

    while res > target && iterations < cfg.max_iter && gamma > 0.0 {
        let q = op.apply(&p);
        let qq = dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let delta = gamma / qq;
        axpy(delta, &p, &mut z);
        axpy(-delta, &q, &mut r);
        s = op.apply_transpose(&r);
        let gamma_next = dot(&s, &s);
        let beta = gamma_next / gamma;
        gamma = gamma_next;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
        iterations += 1;
        res = norm(&r);
        records.push(TraceRecord::new(iterations, res));
    }

    Ok(SolveOutcome {
        x: z,
        alpha: None,
        converged: res <= target,
        iterations,
        inner_iterations: iterations,
        trace: SolveTrace {
            records,
            outer: Vec::new(),
        },
    })
}

/// CGLS on `A L⁻¹ z = b − A x₀`, returning `x = x₀ + L⁻¹ z`. Residual
/// norms in the trace are those of `x` for the original problem.
pub fn cgls_priorconditioned<Op: LinearOperator>(
    pc: &Priorconditioned<Op>,
    b: &[f64],
    target: f64,
    cfg: &CglsConfig,
) -> Result<SolveOutcome> {
    let rhs = pc.effective_rhs(b);
    let mut out = cgls_solve(pc, &rhs, target, cfg)?;
    out.x = pc.recover(&out.x);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::DifferenceMatrix;
    use crate::problems::{relative_stats, sine_wave_problem};
    use crate::testutil::{random_matrix, random_vector, TestRng};
    use crate::vecops::dist;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn consistent_system_reaches_least_squares_solution() {
        let mut rng = TestRng::new(3);
        let a = random_matrix(&mut rng, 12, 7);
        let x = random_vector(&mut rng, 7);
        let b = a.apply(&x);
        let out = cgls_solve(&a, &b, 1e-12 * norm(&b), &CglsConfig::default()).unwrap();
        assert!(out.converged);
        assert!(dist(&out.x, &x) <= 1e-8 * norm(&x));
    }

    #[test]
    fn stops_at_first_iterate_below_target() {
        let mut rng = TestRng::new(4);
        let a = random_matrix(&mut rng, 30, 20);
        let b = random_vector(&mut rng, 30);
        let target = 0.8 * norm(&b);
        let out = cgls_solve(&a, &b, target, &CglsConfig::default()).unwrap();
        assert!(out.converged);
        let rec = &out.trace.records;
        assert!(rec.last().unwrap().res_norm <= target);
        assert!(rec[rec.len() - 2].res_norm > target);
        assert!((dist(&a.apply(&out.x), &b) - rec.last().unwrap().res_norm).abs() < 1e-12);
    }

    #[test]
    fn iterates_lie_in_shifted_krylov_space() {
        let mut rng = TestRng::new(8);
        let a = random_matrix(&mut rng, 15, 10);
        let b = random_vector(&mut rng, 15);
        let x0 = random_vector(&mut rng, 10);
        let pc = Priorconditioned::new(a.clone(), DifferenceMatrix::new(10), x0.clone()).unwrap();
        let cfg = CglsConfig { max_iter: 3 };
        let out = cgls_priorconditioned(&pc, &b, 0.0, &cfg).unwrap();
        assert_eq!(out.iterations, 3);

        // Krylov basis of K₃(ĀᵀĀ, Āᵀr₀), mapped through L⁻¹.
        let r0 = pc.effective_rhs(&b);
        let mut k = pc.apply_transpose(&r0);
        let mut cols = Vec::new();
        for _ in 0..3 {
            cols.push(pc.regularization().solve(&k));
            k = pc.apply_transpose(&pc.apply(&k));
        }
        let basis = DMatrix::from_fn(10, 3, |i, j| cols[j][i]);
        let target = DVector::from_vec(out.x.iter().zip(&x0).map(|(x, s)| x - s).collect());
        let coef = basis.clone().svd(true, true).solve(&target, 1e-14).unwrap();
        assert!((&basis * coef - &target).norm() <= 1e-8 * target.norm());
    }

    #[test]
    fn matches_cgls_on_materialized_operator() {
        let mut rng = TestRng::new(9);
        let a = random_matrix(&mut rng, 12, 6);
        let b = random_vector(&mut rng, 12);
        let pc = Priorconditioned::unshifted(a, DifferenceMatrix::new(6)).unwrap();
        let dense = pc.to_dense();
        let cfg = CglsConfig { max_iter: 4 };
        let direct = cgls_solve(&dense, &b, 0.0, &cfg).unwrap();
        let out = cgls_priorconditioned(&pc, &b, 0.0, &cfg).unwrap();
        assert!(dist(&out.x, &pc.recover(&direct.x)) <= 1e-10 * norm(&out.x));
    }

    #[test]
    fn priorconditioning_improves_smooth_reconstruction() {
        let n = 60;
        let a = crate::problems::random_uniform_problem(120, n, 0.1, 1)
            .unwrap()
            .operator;
        let p = sine_wave_problem(a, 0.1, 11).unwrap();
        let cfg = CglsConfig::default();
        let plain = cgls_solve(&p.operator, &p.rhs, p.noise_level, &cfg).unwrap();
        let pc = Priorconditioned::unshifted(&p.operator, DifferenceMatrix::new(n)).unwrap();
        let prior = cgls_priorconditioned(&pc, &p.rhs, p.noise_level, &cfg).unwrap();
        assert!(plain.converged && prior.converged);
        let e_plain = relative_stats(&p, &plain.x).rel_error.unwrap();
        let e_prior = relative_stats(&p, &prior.x).rel_error.unwrap();
        assert!(e_prior < e_plain, "{e_prior} >= {e_plain}");
    }
}
