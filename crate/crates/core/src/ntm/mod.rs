//! Damped Newton method on the coupled Tikhonov–Morozov system
//!
//! ```text
//! F₁(x, α) = Aᵀ(Ax − b) + αx = 0
//! F₂(x, α) = ½‖Ax − b‖² − ½ε² = 0
//! ```
//!
//! for the pair `(x, α)`, with a step length chosen so that `α` stays
//! positive and the Jacobian stays regular.

mod step;
mod system;

use alloc::vec::Vec;

use nalgebra::DVector;

pub use step::{step_interval, step_size, IntervalCase, StepInterval, StepRule, StepVariant};
pub use system::{
    arrowhead_inverse_norm, d_matrix, lemma_bound, schur_form_inverse, DinvMode, Evaluation,
    TikhonovSystem,
};

use crate::error::{Error, Result};
use crate::linop::LinearOperator;
use crate::trace::{SolveOutcome, SolveTrace, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NtmConfig {
    pub alpha0: f64,
    /// Stop once `‖(F₁; F₂)‖ < tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub rule: StepRule,
}

impl Default for NtmConfig {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            tol: 1e-3,
            max_iter: 1000,
            rule: StepRule::default(),
        }
    }
}

impl NtmConfig {
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
        self.rule.validate()
    }
}

/// Current Newton iterate together with `F` evaluated there.
#[derive(Debug, Clone)]
pub struct Iterate {
    pub x: DVector<f64>,
    pub alpha: f64,
    pub eval: Evaluation,
}

impl Iterate {
    pub fn new(sys: &TikhonovSystem, x: DVector<f64>, alpha: f64, target: f64) -> Self {
        let eval = sys.evaluate(&x, alpha, target);
        Self { x, alpha, eval }
    }

    /// Starts from the Tikhonov solution `x_α`.
    pub fn tikhonov(sys: &TikhonovSystem, alpha: f64, target: f64) -> Result<Self> {
        let x = sys.tikhonov(alpha)?;
        let eval = sys.evaluate_tikhonov(&x, alpha, target);
        Ok(Self { x, alpha, eval })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub gamma: f64,
    /// `‖(Δx; Δα)‖` of the undamped direction.
    pub direction_norm: f64,
    pub dinv: f64,
    pub interval: StepInterval,
}

/// One damped Newton update of `it` in place.
pub fn newton_step(
    sys: &TikhonovSystem,
    it: &mut Iterate,
    target: f64,
    rule: &StepRule,
) -> Result<StepReport> {
    let (dx, d_alpha) = sys.newton_direction(&it.x, it.alpha, &it.eval)?;
    let interval = step_interval(it.alpha, d_alpha, rule.omega);
    let dinv = sys.d_inv_norm(&it.x, it.alpha, rule.dinv_mode);
    let dx_norm = dx.norm();
    let gram_dx_norm = match rule.variant {
        StepVariant::Case1 => sys.gram_apply(&dx).norm(),
        StepVariant::Case2 => 0.0,
    };
    let gamma = step_size(
        rule.variant,
        dx_norm,
        d_alpha,
        gram_dx_norm,
        &interval,
        dinv,
    );
    let direction_norm = libm::sqrt(dx_norm * dx_norm + d_alpha * d_alpha);

    it.x.axpy(gamma, &dx, 1.0);
    it.alpha += gamma * d_alpha;
    it.eval = sys.evaluate(&it.x, it.alpha, target);
    Ok(StepReport {
        gamma,
        direction_norm,
        dinv,
        interval,
    })
}

pub(crate) fn check_target(target: f64, rhs_norm: f64) -> Result<()> {
    if !(target > 0.0) {
        return Err(Error::InvalidConfig("discrepancy target must be positive"));
    }
    if target >= rhs_norm {
        return Err(Error::InfeasibleDiscrepancy { target, rhs_norm });
    }
    Ok(())
}

/// Runs the damped Newton iteration on `op` (materialized densely).
pub fn ntm_solve<Op: LinearOperator + ?Sized>(
    op: &Op,
    b: &[f64],
    target: f64,
    cfg: &NtmConfig,
) -> Result<SolveOutcome> {
    cfg.validate()?;
    check_target(target, crate::vecops::norm(b))?;
    let sys = TikhonovSystem::from_operator(op, b)?;
    ntm_solve_system(&sys, target, cfg)
}

/// As [`ntm_solve`], reusing an already decomposed system.
pub fn ntm_solve_system(
    sys: &TikhonovSystem,
    target: f64,
    cfg: &NtmConfig,
) -> Result<SolveOutcome> {
    cfg.validate()?;
    check_target(target, sys.rhs().norm())?;

    let mut it = Iterate::tikhonov(sys, cfg.alpha0, target)?;
    let mut records: Vec<TraceRecord> = Vec::new();
    records.push(TraceRecord {
        alpha: Some(it.alpha),
        f_norm: Some(it.eval.norm()),
        ..TraceRecord::new(0, it.eval.residual_norm)
    });

    let mut converged = it.eval.norm() < cfg.tol;
    let mut iterations = 0;
    while !converged && iterations < cfg.max_iter {
        let report = newton_step(sys, &mut it, target, &cfg.rule)?;
        iterations += 1;
        let f_norm = it.eval.norm();
        records.push(TraceRecord {
            alpha: Some(it.alpha),
            f_norm: Some(f_norm),
            gamma: Some(report.gamma),
            dinv: Some(report.dinv),
            theta: Some(report.interval.theta),
            case_id: Some(report.interval.case as u8),
            ..TraceRecord::new(iterations, it.eval.residual_norm)
        });
        converged = f_norm < cfg.tol;
    }

    Ok(SolveOutcome {
        x: it.x.as_slice().to_vec(),
        alpha: Some(it.alpha),
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
    use crate::testutil::{random_matrix, random_vector, TestRng};
    use nalgebra::DMatrix;

    /// Consistent problem `b = A x + e` with `‖e‖ = 0.1‖Ax‖`; returns the
    /// system and `‖e‖`.
    fn noisy_system(seed: u64, m: usize, n: usize) -> (TikhonovSystem, f64) {
        let p = crate::problems::random_uniform_problem(m, n, 0.1, seed).unwrap();
        let sys = TikhonovSystem::from_operator(&p.operator, &p.rhs).unwrap();
        (sys, p.noise_level)
    }

    #[test]
    fn identity_operator_closed_form() {
        // ‖b‖ = 2, ε = 1 ⇒ α* = ε/(‖b‖ − ε) = 1, x* = b/2.
        let b = [1.0, 1.0, 1.0, 0.0, 1.0];
        let a = DMatrix::<f64>::identity(5, 5);
        let cfg = NtmConfig {
            tol: 1e-10,
            alpha0: 3.0,
            ..NtmConfig::default()
        };
        let out = ntm_solve(&a, &b, 1.0, &cfg).unwrap();
        assert!(out.converged);
        assert!((out.alpha.unwrap() - 1.0).abs() < 1e-9);
        for (xi, bi) in out.x.iter().zip(&b) {
            assert!((xi - bi / 2.0).abs() < 1e-9);
        }
        assert!((out.final_residual().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_target() {
        let a = DMatrix::<f64>::identity(2, 2);
        let err = ntm_solve(&a, &[3.0, 4.0], 5.0, &NtmConfig::default()).unwrap_err();
        assert_eq!(
            err,
            Error::InfeasibleDiscrepancy {
                target: 5.0,
                rhs_norm: 5.0
            }
        );
        assert!(ntm_solve(&a, &[3.0, 4.0], 0.0, &NtmConfig::default()).is_err());
    }

    #[test]
    fn full_step_residual_identity() {
        // After an undamped step, F = (Δα Δx; ½ ΔxᵀAᵀAΔx).
        let mut rng = TestRng::new(5);
        let a = random_matrix(&mut rng, 8, 5);
        let sys = TikhonovSystem::new(a, DVector::from_vec(random_vector(&mut rng, 8))).unwrap();
        let x = sys.tikhonov(0.7).unwrap();
        let target = 0.5 * sys.rhs().norm();
        let ev = sys.evaluate(&x, 0.7, target);
        let (dx, da) = sys.newton_direction(&x, 0.7, &ev).unwrap();
        let next = sys.evaluate(&(&x + &dx), 0.7 + da, target);
        let f1 = &dx * da;
        let f2 = 0.5 * dx.dot(&sys.gram_apply(&dx));
        assert!((&next.f1 - &f1).norm() <= 1e-8 * f1.norm().max(1e-300));
        assert!((next.f2 - f2).abs() <= 1e-8 * f2.abs());
    }

    #[test]
    fn alpha_stays_positive_and_case1_directions_shrink() {
        for seed in 0..4 {
            let (sys, target) = noisy_system(100 + seed, 40, 25);
            for variant in [StepVariant::Case1, StepVariant::Case2] {
                let rule = StepRule {
                    variant,
                    ..StepRule::default()
                };
                let x0 = sys.tikhonov(1.0).unwrap();
                let mut it = Iterate::new(&sys, x0, 1.0, target);
                let mut prev = f64::INFINITY;
                for _ in 0..200 {
                    if it.eval.norm() < 1e-8 {
                        break;
                    }
                    let report = newton_step(&sys, &mut it, target, &rule).unwrap();
                    assert!(it.alpha > 0.0);
                    if variant == StepVariant::Case1 {
                        let dir_norm = report.direction_norm;
                        assert!(dir_norm < prev * (1.0 + 1e-12), "{dir_norm} !< {prev}");
                        prev = dir_norm;
                    }
                }
            }
        }
    }

    #[test]
    fn step_rules_agree() {
        let (sys, target) = noisy_system(9, 30, 20);
        let mk = |variant| NtmConfig {
            tol: 1e-11,
            max_iter: 5000,
            rule: StepRule {
                variant,
                ..StepRule::default()
            },
            ..NtmConfig::default()
        };
        let one = ntm_solve_system(&sys, target, &mk(StepVariant::Case1)).unwrap();
        let two = ntm_solve_system(&sys, target, &mk(StepVariant::Case2)).unwrap();
        assert!(one.converged && two.converged);
        let (a1, a2) = (one.alpha.unwrap(), two.alpha.unwrap());
        assert!((a1 - a2).abs() <= 1e-6 * a2);
        assert!(crate::vecops::dist(&one.x, &two.x) <= 1e-6 * crate::vecops::norm(&two.x));
        assert!(one.iterations >= two.iterations);
    }

    #[test]
    fn trace_layout() {
        let (sys, target) = noisy_system(3, 12, 6);
        let out = ntm_solve_system(&sys, target, &NtmConfig::default()).unwrap();
        assert_eq!(out.trace.records.len(), out.iterations + 1);
        assert_eq!(out.trace.records[0].gamma, None);
        for (i, r) in out.trace.records.iter().enumerate() {
            assert_eq!(r.iter, i);
        }
        let last = out.trace.records.last().unwrap();
        assert!(last.f_norm.unwrap() < 1e-3);
        assert!(matches!(last.case_id, Some(1..=3)));
    }

    #[test]
    fn tikhonov_start_matches_direct_evaluation() {
        let (sys, target) = noisy_system(6, 30, 20);
        let it = Iterate::tikhonov(&sys, 0.8, target).unwrap();
        let direct = sys.evaluate(&it.x, 0.8, target);
        assert!(direct.f1.norm() <= 1e-10 * direct.gradient.norm());
        assert!((&direct.gradient - &it.eval.gradient).norm() <= 1e-10 * direct.gradient.norm());
        assert_eq!(direct.f2, it.eval.f2);
    }

    #[test]
    fn tiny_alpha_start_still_raises_alpha() {
        // Target above the least-squares residual: α must grow from a
        // start far below eps·λ₁.
        for seed in 0..8 {
            let (sys, target) = noisy_system(seed, 60, 40);
            let alpha = 1e-18 * sys.lambda_max();
            let it = Iterate::tikhonov(&sys, alpha, target).unwrap();
            assert!(it.eval.f2 < 0.0);
            let (_, d_alpha) = sys.newton_direction(&it.x, it.alpha, &it.eval).unwrap();
            assert!(d_alpha > 0.0, "seed {seed}");
            let cfg = NtmConfig {
                alpha0: alpha,
                ..NtmConfig::default()
            };
            assert!(
                ntm_solve_system(&sys, target, &cfg).unwrap().converged,
                "seed {seed}"
            );
        }
    }

    #[test]
    fn iteration_cap_flags_nonconvergence() {
        let (sys, target) = noisy_system(4, 12, 6);
        let cfg = NtmConfig {
            max_iter: 1,
            tol: 1e-14,
            ..NtmConfig::default()
        };
        let out = ntm_solve_system(&sys, target, &cfg).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 1);
    }
}
