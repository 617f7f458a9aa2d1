//! Synthetic inverse problems with seeded noise.
//!
//! All randomness comes from a ChaCha20 stream seeded with
//! `ChaCha20Rng::seed_from_u64(seed)`. Uniform deviates in `[0, 1)` are the
//! top 53 bits of successive `next_u64` words scaled by `2⁻⁵³`; standard
//! normals are produced pairwise by the Box–Muller transform
//! `√(−2 ln(1 − u₁))·(cos 2πu₂, sin 2πu₂)`. Draw order for the random
//! uniform problem is: matrix entries in column-major order, then the
//! ground truth, then the noise vector.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::linop::{LinearOperator, Matrix};
use crate::vecops::{dist, norm};

/// Seeded source of uniform and Gaussian deviates.
pub struct NoiseStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    /// Standard normal via Box–Muller.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let (s, c) = libm::sincos(2.0 * PI * u2);
        self.spare = Some(r * s);
        r * c
    }
}

/// `(A, b, ε, η)` plus the generating data when known.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseProblem {
    pub operator: Matrix,
    pub rhs: Vec<f64>,
    /// ε, the noise norm used by the discrepancy principle.
    pub noise_level: f64,
    /// η ≥ 1; the discrepancy target is `η·ε`.
    pub eta: f64,
    pub ground_truth: Option<Vec<f64>>,
    pub exact_rhs: Option<Vec<f64>>,
    pub noise: Option<Vec<f64>>,
    /// Per-entry noise standard deviation σ.
    pub sigma: Option<f64>,
    pub seed: Option<u64>,
}

impl InverseProblem {
    /// A problem with only the data the solvers need.
    pub fn new(operator: Matrix, rhs: Vec<f64>, noise_level: f64) -> Result<Self> {
        if rhs.len() != operator.nrows() {
            return Err(Error::DimensionMismatch {
                expected: operator.nrows(),
                found: rhs.len(),
            });
        }
        if !(noise_level >= 0.0) {
            return Err(Error::InvalidConfig("noise level must be nonnegative"));
        }
        Ok(Self {
            operator,
            rhs,
            noise_level,
            eta: 1.0,
            ground_truth: None,
            exact_rhs: None,
            noise: None,
            sigma: None,
            seed: None,
        })
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta >= 1.0) {
            return Err(Error::InvalidConfig("eta must be at least 1"));
        }
        self.eta = eta;
        Ok(self)
    }

    /// `η·ε`
    pub fn discrepancy_target(&self) -> f64 {
        self.eta * self.noise_level
    }

    pub fn rhs_norm(&self) -> f64 {
        norm(&self.rhs)
    }

    /// `‖e‖` of the recorded noise draw.
    pub fn realized_noise_norm(&self) -> Option<f64> {
        self.noise.as_deref().map(norm)
    }
}

/// Builds `b = A x_ex + e` with `σ = fraction·‖A x_ex‖/√m` and
/// `ε = σ√m = fraction·‖A x_ex‖`.
fn add_noise(
    operator: Matrix,
    ground_truth: Vec<f64>,
    noise_fraction: f64,
    stream: &mut NoiseStream,
    seed: u64,
) -> Result<InverseProblem> {
    if !(0.0..1.0).contains(&noise_fraction) {
        return Err(Error::InvalidConfig("noise fraction must lie in [0, 1)"));
    }
    let m = operator.nrows();
    let exact = operator.apply(&ground_truth);
    let exact_norm = norm(&exact);
    let epsilon = noise_fraction * exact_norm;
    let sigma = epsilon / libm::sqrt(m as f64);

    let noise: Vec<f64> = if noise_fraction == 0.0 {
        alloc::vec![0.0; m]
    } else {
        (0..m).map(|_| sigma * stream.gaussian()).collect()
    };
    let rhs: Vec<f64> = exact.iter().zip(&noise).map(|(a, e)| a + e).collect();

    Ok(InverseProblem {
        operator,
        rhs,
        noise_level: epsilon,
        eta: 1.0,
        ground_truth: Some(ground_truth),
        exact_rhs: Some(exact),
        noise: Some(noise),
        sigma: Some(sigma),
        seed: Some(seed),
    })
}

/// Dense `m × n` problem with `A`, `x_ex` i.i.d. U(−1, 1) and Gaussian noise.
pub fn random_uniform_problem(
    m: usize,
    n: usize,
    noise_fraction: f64,
    seed: u64,
) -> Result<InverseProblem> {
    if n == 0 {
        return Err(Error::InvalidConfig("problem needs at least one column"));
    }
    if m < n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m,
        });
    }
    let mut stream = NoiseStream::new(seed);
    let entries: Vec<f64> = (0..m * n).map(|_| stream.symmetric()).collect();
    let a = DMatrix::from_vec(m, n, entries);
    let truth: Vec<f64> = (0..n).map(|_| stream.symmetric()).collect();
    add_noise(Matrix::Dense(a), truth, noise_fraction, &mut stream, seed)
}

/// `x_ex,i = sin(i h)`, `h = 2π/(n + 1)`, `i = 1..n`.
pub fn sine_wave(n: usize) -> Vec<f64> {
    let h = 2.0 * PI / (n as f64 + 1.0);
    (1..=n).map(|i| libm::sin(i as f64 * h)).collect()
}

/// Sine-wave ground truth pushed through `operator` with Gaussian noise.
pub fn sine_wave_problem(
    operator: Matrix,
    noise_fraction: f64,
    seed: u64,
) -> Result<InverseProblem> {
    let truth = sine_wave(operator.ncols());
    let mut stream = NoiseStream::new(seed);
    add_noise(operator, truth, noise_fraction, &mut stream, seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeStats {
    /// `‖x − x_ex‖/‖x_ex‖`; `None` without a nonzero ground truth.
    pub rel_error: Option<f64>,
    /// `‖Ax − b‖/‖b‖`
    pub rel_residual: f64,
    /// `ε/‖b‖`
    pub rel_discrepancy: f64,
}

pub fn relative_stats(problem: &InverseProblem, x: &[f64]) -> RelativeStats {
    let b_norm = problem.rhs_norm();
    let ax = problem.operator.apply(x);
    let rel_residual = dist(&ax, &problem.rhs) / b_norm;
    let rel_error = problem.ground_truth.as_deref().and_then(|truth| {
        let t = norm(truth);
        (t > 0.0).then(|| dist(x, truth) / t)
    });
    RelativeStats {
        rel_error,
        rel_residual,
        rel_discrepancy: problem.noise_level / b_norm,
    }
}
