//! Dense Tikhonov–Morozov system `F(x, α) = 0` for a fixed `(A, b)`.
//!
//! The right singular basis of `A` (equivalently the eigenbasis `Q` of
//! `AᵀA = QΛQᵀ`) is computed once. Every shifted solve with
//! `K = AᵀA + αI` is then a diagonal scaling in that basis, which makes the
//! bordered Newton system and the rescaled Jacobian `D(x, α)` cheap to
//! handle for any `α > 0`. The same type serves the full-space solver and
//! the projected `(B_{k+1,k}, c_k)` systems.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linop::LinearOperator;

/// How `‖D⁻¹(x, α)‖` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DinvMode {
    /// The spectral norm itself, i.e. `1/σ_min(D)`.
    #[default]
    Exact,
    /// The closed-form upper bound `(1 + ‖x‖/α)² max{1/α, (α + λ₁)/‖x‖²}`.
    LemmaBound,
}

/// `F` and the pieces of it the Newton step reuses.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// `F₁ = Aᵀ(Ax − b) + αx`
    pub f1: DVector<f64>,
    /// `F₂ = ½‖Ax − b‖² − ½ε²`
    pub f2: f64,
    /// `Aᵀ(Ax − b)`
    pub gradient: DVector<f64>,
    pub residual_norm: f64,
}

impl Evaluation {
    /// Euclidean norm of the stacked vector `(F₁; F₂)`.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.f1.norm_squared() + self.f2 * self.f2)
    }
}

#[derive(Debug, Clone)]
pub struct TikhonovSystem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    basis: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    /// `Qᵀ Aᵀ b`
    atb_coeffs: DVector<f64>,
}

impl TikhonovSystem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let (m, n) = a.shape();
        if b.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: b.len(),
            });
        }
        let (basis, eigenvalues) = if m >= n {
            let svd = a.clone().svd(false, true);
            let v_t = svd.v_t.expect("right singular vectors were requested");
            let lambda = svd.singular_values.map(|s| s * s);
            (v_t.transpose(), lambda)
        } else {
            // Wide matrices: the thin SVD misses the null space of A.
            let eig = a.tr_mul(&a).symmetric_eigen();
            (eig.eigenvectors, eig.eigenvalues.map(|l| l.max(0.0)))
        };
        let atb = a.tr_mul(&b);
        let atb_coeffs = basis.tr_mul(&atb);
        Ok(Self {
            a,
            b,
            basis,
            eigenvalues,
            atb_coeffs,
        })
    }

    pub fn from_operator<Op: LinearOperator + ?Sized>(op: &Op, b: &[f64]) -> Result<Self> {
        Self::new(op.to_dense(), DVector::from_column_slice(b))
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    /// Eigenvalues of `AᵀA`.
    pub fn gram_eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// `λ₁`, the largest eigenvalue of `AᵀA`.
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(0.0, f64::max)
    }

    /// Solution of `(AᵀA + αI) x = Aᵀb`.
    pub fn tikhonov(&self, alpha: f64) -> Result<DVector<f64>> {
        if !(alpha > 0.0) {
            return Err(Error::NonPositiveAlpha(alpha));
        }
        let coeffs = self
            .atb_coeffs
            .zip_map(&self.eigenvalues, |c, l| c / (l + alpha));
        Ok(&self.basis * coeffs)
    }

    /// Minimum-norm least-squares solution (`α = 0`); eigenvalues below
    /// `n·ε_mach·λ₁` are treated as zero.
    pub fn least_squares(&self) -> DVector<f64> {
        let cutoff = self.ncols().max(1) as f64 * f64::EPSILON * self.lambda_max();
        let coeffs =
            self.atb_coeffs.zip_map(
                &self.eigenvalues,
                |c, l| if l > cutoff { c / l } else { 0.0 },
            );
        &self.basis * coeffs
    }

    pub fn residual_norm(&self, x: &DVector<f64>) -> f64 {
        (&self.a * x - &self.b).norm()
    }

    /// `AᵀA v`
    pub fn gram_apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.a.tr_mul(&(&self.a * v))
    }

    pub fn evaluate(&self, x: &DVector<f64>, alpha: f64, target: f64) -> Evaluation {
        let r = &self.a * x - &self.b;
        let rr = r.norm_squared();
        let gradient = self.a.tr_mul(&r);
        let f1 = &gradient + x * alpha;
        Evaluation {
            f1,
            f2: 0.5 * (rr - target * target),
            gradient,
            residual_norm: libm::sqrt(rr),
        }
    }

    /// `F` at the Tikhonov solution `x = x_α`, where `F₁ = 0` and
    /// `Aᵀ(Ax − b) = −αx` hold exactly. Evaluating them numerically instead
    /// leaves a roundoff of order `eps·λ₁‖x‖` that swamps `αx` once `α`
    /// approaches `eps·λ₁`.
    pub fn evaluate_tikhonov(&self, x: &DVector<f64>, alpha: f64, target: f64) -> Evaluation {
        let rr = (&self.a * x - &self.b).norm_squared();
        Evaluation {
            f1: DVector::zeros(x.len()),
            f2: 0.5 * (rr - target * target),
            gradient: x * -alpha,
            residual_norm: libm::sqrt(rr),
        }
    }

    /// Newton search direction `(Δx, Δα)` at `(x, α)` from the Jacobian
    /// system whose last row is divided by `α`:
    ///
    /// ```text
    /// [ AᵀA + αI        x ] [Δx]     [ F₁   ]
    /// [ (Ax − b)ᵀA/α    0 ] [Δα] = − [ F₂/α ]
    /// ```
    ///
    /// Solved by block elimination on the SPD leading block.
    pub fn newton_direction(
        &self,
        x: &DVector<f64>,
        alpha: f64,
        eval: &Evaluation,
    ) -> Result<(DVector<f64>, f64)> {
        if !(alpha > 0.0) {
            return Err(Error::NonPositiveAlpha(alpha));
        }
        let shifted = self.eigenvalues.map(|l| l + alpha);
        let kx = self.basis.tr_mul(x).component_div(&shifted);
        let kf = self.basis.tr_mul(&eval.f1).component_div(&shifted);
        let row = self.basis.tr_mul(&eval.gradient) / alpha;

        let schur = row.dot(&kx);
        let scale = row.norm() * kx.norm();
        if !schur.is_finite() || schur.abs() <= 1e-14 * scale || scale == 0.0 {
            return Err(Error::SingularJacobian);
        }
        let d_alpha = (eval.f2 / alpha - row.dot(&kf)) / schur;
        let dx = -(&self.basis * (kf + kx * d_alpha));
        Ok((dx, d_alpha))
    }

    /// `‖D⁻¹(x, α)‖` for `D = [[AᵀA + αI, x], [−xᵀ, 0]]`.
    pub fn d_inv_norm(&self, x: &DVector<f64>, alpha: f64, mode: DinvMode) -> f64 {
        let x_norm = x.norm();
        match mode {
            DinvMode::LemmaBound if x_norm > 0.0 => lemma_bound(x_norm, alpha, self.lambda_max()),
            _ => {
                let shifted: Vec<f64> = self.eigenvalues.iter().map(|l| l + alpha).collect();
                let w = self.basis.tr_mul(x);
                arrowhead_inverse_norm(&shifted, w.as_slice())
            }
        }
    }
}

/// Upper bound on `‖D⁻¹(x, α)‖` from the factorization
/// `D⁻¹ = [[I, −t], [0, 1]] · diag(K⁻¹, 1/s) · [[I, 0], [tᵀ, 1]]` with
/// `‖t‖ ≤ ‖x‖/α`, `‖K⁻¹‖ ≤ 1/α` and `s ≥ ‖x‖²/(α + λ₁)`.
pub fn lemma_bound(x_norm: f64, alpha: f64, lambda_max: f64) -> f64 {
    let outer = 1.0 + x_norm / alpha;
    outer * outer * f64::max(1.0 / alpha, (alpha + lambda_max) / (x_norm * x_norm))
}

/// Dense `D(x, α) = [[G + αI, x], [−xᵀ, 0]]` for a Gram matrix `G`.
pub fn d_matrix(gram: &DMatrix<f64>, x: &DVector<f64>, alpha: f64) -> DMatrix<f64> {
    let n = gram.nrows();
    let mut d = DMatrix::zeros(n + 1, n + 1);
    d.view_mut((0, 0), (n, n)).copy_from(gram);
    for i in 0..n {
        d[(i, i)] += alpha;
        d[(i, n)] = x[i];
        d[(n, i)] = -x[i];
    }
    d
}

/// `D⁻¹` assembled from the Schur complement `s = xᵀK⁻¹x`, `t = K⁻¹x`:
/// `[[K⁻¹ − ttᵀ/s, −t/s], [tᵀ/s, 1/s]]`. `None` if `K` is not positive
/// definite or `s = 0`.
pub fn schur_form_inverse(
    gram: &DMatrix<f64>,
    x: &DVector<f64>,
    alpha: f64,
) -> Option<DMatrix<f64>> {
    let n = gram.nrows();
    let mut k = gram.clone();
    for i in 0..n {
        k[(i, i)] += alpha;
    }
    let chol = k.cholesky()?;
    let k_inv = chol.inverse();
    let t = &k_inv * x;
    let s = x.dot(&t);
    if !(s > 0.0) {
        return None;
    }
    let mut inv = DMatrix::zeros(n + 1, n + 1);
    inv.view_mut((0, 0), (n, n))
        .copy_from(&(k_inv - &t * t.transpose() / s));
    for i in 0..n {
        inv[(i, n)] = -t[i] / s;
        inv[(n, i)] = t[i] / s;
    }
    inv[(n, n)] = 1.0 / s;
    Some(inv)
}

/// Spectral norm of the inverse of the arrowhead matrix
/// `H = [[diag(d), w], [−wᵀ, 0]]`, `d > 0`.
///
/// `H⁻¹ = diag(d⁻¹, 0) + (e − t̂)(e + t̂)ᵀ/s` with `t = w/d`, `s = wᵀt`, so
/// products with `H⁻¹` and `H⁻ᵀ` cost O(n). The largest eigenvalue of
/// `H⁻ᵀH⁻¹` is found by Lanczos with full reorthogonalization, stopped
/// once the Ritz residual falls below `1e-13` relative.
pub fn arrowhead_inverse_norm(d: &[f64], w: &[f64]) -> f64 {
    let n = d.len();
    let t: Vec<f64> = w.iter().zip(d).map(|(wi, di)| wi / di).collect();
    let s: f64 = w.iter().zip(&t).map(|(wi, ti)| wi * ti).sum();
    if !(s > 0.0) {
        return f64::INFINITY;
    }

    let apply_inv = |v: &[f64], out: &mut [f64]| {
        let tv: f64 = t.iter().zip(&v[..n]).map(|(a, b)| a * b).sum();
        let c = (tv + v[n]) / s;
        for i in 0..n {
            out[i] = v[i] / d[i] - t[i] * c;
        }
        out[n] = c;
    };
    let apply_inv_t = |v: &[f64], out: &mut [f64]| {
        let tv: f64 = t.iter().zip(&v[..n]).map(|(a, b)| a * b).sum();
        for i in 0..n {
            out[i] = v[i] / d[i] - t[i] * (tv - v[n]) / s;
        }
        out[n] = (v[n] - tv) / s;
    };

    let dim = n + 1;
    let mut tmp = alloc::vec![0.0; dim];
    let mut op = |v: &[f64], out: &mut [f64]| {
        apply_inv(v, &mut tmp);
        apply_inv_t(&tmp, out);
    };

    // Deterministic start with components along every axis.
    let mut q: Vec<f64> = (0..dim)
        .map(|i| 1.0 + 0.5 * libm::sin(1.3 * i as f64 + 0.7))
        .collect();
    let qn = crate::vecops::norm(&q);
    crate::vecops::scale(1.0 / qn, &mut q);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut diag: Vec<f64> = Vec::new();
    let mut off: Vec<f64> = Vec::new();
    let mut w_vec = alloc::vec![0.0; dim];
    let mut theta = 0.0;

    for j in 0..dim {
        op(&q, &mut w_vec);
        let a_j = crate::vecops::dot(&q, &w_vec);
        crate::vecops::axpy(-a_j, &q, &mut w_vec);
        if let (Some(&b_prev), Some(q_prev)) = (off.last(), basis.last()) {
            crate::vecops::axpy(-b_prev, q_prev, &mut w_vec);
        }
        basis.push(core::mem::take(&mut q));
        for _ in 0..2 {
            for qi in &basis {
                let c = crate::vecops::dot(qi, &w_vec);
                crate::vecops::axpy(-c, qi, &mut w_vec);
            }
        }
        diag.push(a_j);
        let beta = crate::vecops::norm(&w_vec);

        let size = diag.len();
        let check = size < 40 || size.is_multiple_of(8) || j + 1 == dim;
        if check {
            let tri = DMatrix::from_fn(size, size, |r, c| {
                if r == c {
                    diag[r]
                } else if r == c + 1 {
                    off[c]
                } else if c == r + 1 {
                    off[r]
                } else {
                    0.0
                }
            });
            let eig = tri.symmetric_eigen();
            let (imax, &tmax) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("tridiagonal matrix is nonempty");
            theta = tmax;
            let resid = beta * eig.eigenvectors[(size - 1, imax)].abs();
            if resid <= 1e-13 * theta {
                break;
            }
        }
        if beta <= 1e-300 || j + 1 == dim {
            break;
        }
        off.push(beta);
        q = w_vec.iter().map(|v| v / beta).collect();
    }
    libm::sqrt(theta)
}
