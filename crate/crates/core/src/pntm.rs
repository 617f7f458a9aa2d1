//! Projected Newton method: the damped Newton iteration run on the
//! Tikhonov–Morozov system projected onto a growing Golub–Kahan subspace.
//!
//! Outer iteration `k` adds one bidiagonalization step and then iterates on
//!
//! ```text
//! F̃₁(y, α) = Bᵀ(By − c) + αy = 0
//! F̃₂(y, α) = ½‖By − c‖² − ½ε² = 0
//! ```
//!
//! with `B = B_{k+1,k}` and `c = ‖b‖e₁`, warm-started from the previous
//! `α`. The method stops once the inner iteration converges and `α` has
//! stagnated between two consecutive outer iterations; the iterate is then
//! lifted back as `x = V_k y`.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::bidiag::Bidiagonalization;
use crate::error::{Error, Result};
use crate::linop::LinearOperator;
use crate::ntm::{
    check_target, newton_step, DinvMode, Iterate, StepRule, StepVariant, TikhonovSystem,
};
use crate::trace::{OuterRecord, SolveOutcome, SolveTrace, TraceRecord};
use crate::vecops::{dist, norm};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PntmConfig {
    pub alpha0: f64,
    /// Tolerance for both `‖F̃‖` and the relative change of `α`.
    pub tol: f64,
    pub outer_max: usize,
    /// Inner cap while the projected residual still exceeds `ε`, as
    /// `min(k, inner_cap_small)`.
    pub inner_cap_small: usize,
    /// Inner cap once the subspace can reach the discrepancy.
    pub inner_cap_large: usize,
    pub variant: StepVariant,
    pub omega: f64,
}

impl Default for PntmConfig {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            tol: 1e-3,
            outer_max: 100,
            inner_cap_small: 10,
            inner_cap_large: 10_000,
            variant: StepVariant::Case2,
            omega: 0.9,
        }
    }
}

impl PntmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0) {
            return Err(Error::NonPositiveAlpha(self.alpha0));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("tol must be positive"));
        }
        if self.outer_max == 0 {
            return Err(Error::InvalidConfig("outer_max must be at least 1"));
        }
        if self.inner_cap_small == 0 || self.inner_cap_small > self.inner_cap_large {
            return Err(Error::InvalidConfig(
                "inner caps must satisfy 1 <= small <= large",
            ));
        }
        self.rule().validate()
    }

    fn rule(&self) -> StepRule {
        StepRule {
            variant: self.variant,
            omega: self.omega,
            dinv_mode: DinvMode::Exact,
        }
    }
}

/// The projected pair `(B_{k+1,k}, c_k)` as a decomposed Tikhonov system.
pub fn projected_system(f: &Bidiagonalization) -> Result<TikhonovSystem> {
    if f.dim() == 0 {
        return Err(Error::KrylovExhausted);
    }
    TikhonovSystem::new(f.b_matrix(), f.c_vector())
}

/// Newton direction `(Δy, Δα)` of the projected system at `(y, α)`.
pub fn projected_newton_direction(
    f: &Bidiagonalization,
    y: &[f64],
    alpha: f64,
    target: f64,
) -> Result<(Vec<f64>, f64)> {
    let sys = projected_system(f)?;
    if y.len() != sys.ncols() {
        return Err(Error::DimensionMismatch {
            expected: sys.ncols(),
            found: y.len(),
        });
    }
    let y = DVector::from_column_slice(y);
    let eval = sys.evaluate(&y, alpha, target);
    let (dy, da) = sys.newton_direction(&y, alpha, &eval)?;
    Ok((dy.as_slice().to_vec(), da))
}

pub fn pntm_solve<Op: LinearOperator + ?Sized>(
    op: &Op,
    b: &[f64],
    target: f64,
    cfg: &PntmConfig,
) -> Result<SolveOutcome> {
    cfg.validate()?;
    check_target(target, norm(b))?;
    let rule = cfg.rule();

    let mut f = Bidiagonalization::new(op, b)?;
    let mut alpha = cfg.alpha0;
    let mut y = DVector::zeros(0);
    let mut records = Vec::new();
    let mut outer = Vec::new();
    let mut steps = 0;
    let mut converged = false;

    for k in 1..=cfg.outer_max {
        if !f.is_exhausted() {
            f.expand(op)?;
        }
        let sys = projected_system(&f)?;
        let dim = sys.ncols();

        let mut it = Iterate::tikhonov(&sys, alpha, target)?;
        let cap = if it.eval.residual_norm > target {
            k.min(cfg.inner_cap_small)
        } else {
            cfg.inner_cap_large
        };

        let mut inner = 0;
        let mut flag = it.eval.norm() < cfg.tol;
        while !flag && inner < cap {
            let report = newton_step(&sys, &mut it, target, &rule)?;
            inner += 1;
            steps += 1;
            let f_norm = it.eval.norm();
            records.push(TraceRecord {
                alpha: Some(it.alpha),
                f_norm: Some(f_norm),
                gamma: Some(report.gamma),
                dinv: Some(report.dinv),
                theta: Some(report.interval.theta),
                case_id: Some(report.interval.case as u8),
                outer_iter: Some(k),
                inner_iter: Some(inner),
                subspace_dim: Some(dim),
                proj_res: Some(it.eval.residual_norm),
                ..TraceRecord::new(steps, it.eval.residual_norm)
            });
            flag = f_norm < cfg.tol;
        }

        let alpha_rel_change = (it.alpha - alpha).abs() / alpha.max(1e-300);
        alpha = it.alpha;
        y = it.x;
        let x = f.lift(y.as_slice());
        outer.push(OuterRecord {
            outer_iter: k,
            subspace_dim: dim,
            inner_iters: inner,
            alpha,
            res_norm: dist(&op.apply(&x), b),
            proj_res: it.eval.residual_norm,
            f_norm: it.eval.norm(),
            inner_converged: flag,
            alpha_rel_change,
        });
        if flag && alpha_rel_change < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(SolveOutcome {
        x: f.lift(y.as_slice()),
        alpha: Some(alpha),
        converged,
        iterations: outer.len(),
        inner_iterations: steps,
        trace: SolveTrace { records, outer },
    })
}
