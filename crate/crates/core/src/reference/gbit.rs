//! Generalized bidiagonal Tikhonov: per Krylov step, solve the projected
//! Tikhonov problem at the previous `α` and correct `α` by a secant step
//! between that residual and the unregularized (LSQR) one.

use alloc::vec::Vec;

use crate::bidiag::Bidiagonalization;
use crate::error::{Error, Result};
use crate::linop::LinearOperator;
use crate::ntm::check_target;
use crate::pntm::projected_system;
use crate::trace::{SolveOutcome, SolveTrace, TraceRecord};
use crate::vecops::norm;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbitConfig {
    pub alpha0: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GbitConfig {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            tol: 1e-3,
            max_iter: 100,
        }
    }
}

impl GbitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0) {
            return Err(Error::NonPositiveAlpha(self.alpha0));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("tol must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// `α_k = |(ε − r_z)/(r_y − r_z)|·α_{k−1}`, or `None` when the secant is
/// degenerate (`r_y ≈ r_z`) or would give `α = 0`.
pub fn secant_alpha(eps: f64, res_lsq: f64, res_tik: f64, alpha_prev: f64) -> Option<f64> {
    let denom = res_tik - res_lsq;
    if denom.abs() <= 1e-14 * res_tik.abs() {
        return None;
    }
    let alpha = ((eps - res_lsq) / denom).abs() * alpha_prev;
    (alpha > 0.0 && alpha.is_finite()).then_some(alpha)
}

pub fn gbit_solve<Op: LinearOperator + ?Sized>(
    op: &Op,
    b: &[f64],
    target: f64,
    cfg: &GbitConfig,
) -> Result<SolveOutcome> {
    cfg.validate()?;
    check_target(target, norm(b))?;

    let mut f = Bidiagonalization::new(op, b)?;
    let mut alpha = cfg.alpha0;
    let mut y: Vec<f64> = Vec::new();
    let mut records = Vec::new();
    let mut converged = false;

    for k in 1..=cfg.max_iter {
        if !f.is_exhausted() {
            f.expand(op)?;
        }
        let sys = projected_system(&f)?;
        let z = sys.least_squares();
        let res_lsq = sys.residual_norm(&z);
        let yk = sys.tikhonov(alpha)?;
        let res_tik = sys.residual_norm(&yk);

        let next = secant_alpha(target, res_lsq, res_tik, alpha).unwrap_or(alpha);
        let f_norm = sys.evaluate(&yk, next, target).norm();
        let rel_change = (next - alpha).abs() / alpha;
        alpha = next;
        y = yk.as_slice().to_vec();
        records.push(TraceRecord {
            alpha: Some(alpha),
            f_norm: Some(f_norm),
            subspace_dim: Some(sys.ncols()),
            proj_res: Some(res_tik),
            ..TraceRecord::new(k, res_tik)
        });
        if f_norm < cfg.tol && rel_change < cfg.tol {
            converged = true;
            break;
        }
    }

    let iterations = records.len();
    Ok(SolveOutcome {
        x: f.lift(&y),
        alpha: Some(alpha),
        converged,
        iterations,
        inner_iterations: iterations,
        trace: SolveTrace {
            records,
            outer: Vec::new(),
        },
    })
}
