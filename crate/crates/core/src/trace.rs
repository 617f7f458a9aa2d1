//! Per-iteration solver records.

use alloc::vec::Vec;

/// One row of a solver trace. Fields a method does not produce stay `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRecord {
    /// Iteration index; 0 is the starting point.
    pub iter: usize,
    pub alpha: Option<f64>,
    /// `‖Ax − b‖` of the iterate (for projected methods, of the lifted one).
    pub res_norm: f64,
    /// `‖F(x, α)‖`
    pub f_norm: Option<f64>,
    pub gamma: Option<f64>,
    pub dinv: Option<f64>,
    pub theta: Option<f64>,
    /// Branch of the step interval, 1 to 3.
    pub case_id: Option<u8>,
    pub outer_iter: Option<usize>,
    pub inner_iter: Option<usize>,
    pub subspace_dim: Option<usize>,
    /// `‖B y − c‖` in the projected space.
    pub proj_res: Option<f64>,
}

impl TraceRecord {
    pub fn new(iter: usize, res_norm: f64) -> Self {
        Self {
            iter,
            res_norm,
            ..Self::default()
        }
    }
}

/// Summary of one outer iteration of a projected method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterRecord {
    pub outer_iter: usize,
    pub subspace_dim: usize,
    pub inner_iters: usize,
    pub alpha: f64,
    /// `‖A V y − b‖`, computed from the lifted iterate.
    pub res_norm: f64,
    pub proj_res: f64,
    /// Projected `‖F̃‖` at the end of the outer iteration.
    pub f_norm: f64,
    /// Whether the inner iteration met its tolerance.
    pub inner_converged: bool,
    /// `|α_k − α_{k−1}|/α_{k−1}`
    pub alpha_rel_change: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    pub outer: Vec<OuterRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    /// Final regularization parameter, for methods that have one.
    pub alpha: Option<f64>,
    pub converged: bool,
    /// Outer iterations for projected methods, iterations otherwise.
    pub iterations: usize,
    /// Total inner iterations of projected methods; equal to
    /// `iterations` otherwise.
    pub inner_iterations: usize,
    pub trace: SolveTrace,
}

impl SolveOutcome {
    pub fn final_residual(&self) -> Option<f64> {
        self.trace.records.last().map(|r| r.res_norm)
    }
}
