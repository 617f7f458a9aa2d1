//! Step-length safeguards for the damped Newton iteration.

use crate::error::{Error, Result};

use super::system::DinvMode;

/// Which step-length formula is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepVariant {
    /// Keeps the Jacobian regular and makes the Newton direction shrink
    /// monotonically. Smaller steps.
    Case1,
    /// Keeps the Jacobian regular only. Larger steps, fewer iterations.
    #[default]
    Case2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRule {
    pub variant: StepVariant,
    /// Fraction of the distance to `α = 0` a step may cover, in `(0, 1)`.
    pub omega: f64,
    pub dinv_mode: DinvMode,
}

impl Default for StepRule {
    fn default() -> Self {
        Self {
            variant: StepVariant::Case2,
            omega: 0.9,
            dinv_mode: DinvMode::Exact,
        }
    }
}

impl StepRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return Err(Error::InvalidConfig(
                "omega must lie strictly between 0 and 1",
            ));
        }
        Ok(())
    }
}

/// Which branch of the admissible interval `I_k = (0, γmax]` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalCase {
    /// `Δα ≥ 0`
    Increasing = 1,
    /// `Δα < 0`, `α + Δα > 0`
    Decreasing = 2,
    /// `Δα < 0`, `α + Δα ≤ 0`: the full step would leave `α > 0`.
    Clamped = 3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInterval {
    pub gamma_max: f64,
    /// Bound on `√(1 + ζ²)` over the interval, `ζ = α/(α + γΔα)`.
    pub theta: f64,
    pub case: IntervalCase,
}

pub fn step_interval(alpha_prev: f64, d_alpha: f64, omega: f64) -> StepInterval {
    if d_alpha >= 0.0 {
        StepInterval {
            gamma_max: 1.0,
            theta: core::f64::consts::SQRT_2,
            case: IntervalCase::Increasing,
        }
    } else if alpha_prev + d_alpha > 0.0 {
        let zeta = alpha_prev / (alpha_prev + d_alpha);
        StepInterval {
            gamma_max: 1.0,
            theta: libm::sqrt(1.0 + zeta * zeta),
            case: IntervalCase::Decreasing,
        }
    } else {
        let z = 1.0 / (1.0 - omega);
        StepInterval {
            gamma_max: -omega * alpha_prev / d_alpha,
            theta: libm::sqrt(1.0 + z * z),
            case: IntervalCase::Clamped,
        }
    }
}

/// Damping factor `γ ∈ (0, γmax]`.
///
/// `gram_dx_norm` is `‖AᵀAΔx‖` and only enters [`StepVariant::Case1`].
/// A zero direction yields `γmax`; the result is never zero, negative or
/// NaN.
pub fn step_size(
    variant: StepVariant,
    dx_norm: f64,
    d_alpha: f64,
    gram_dx_norm: f64,
    interval: &StepInterval,
    dinv: f64,
) -> f64 {
    let mut denom = d_alpha.abs() + interval.theta * dx_norm;
    if variant == StepVariant::Case1 {
        denom += libm::sqrt(d_alpha * d_alpha + 0.25 * gram_dx_norm * gram_dx_norm);
    }
    if denom == 0.0 {
        return interval.gamma_max;
    }
    let gamma = f64::min(interval.gamma_max, 1.0 / (denom * dinv));
    if gamma > 0.0 {
        gamma
    } else {
        f64::MIN_POSITIVE
    }
}
