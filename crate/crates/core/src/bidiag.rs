//! Golub–Kahan lower bidiagonalization (Bidiag1) with full
//! reorthogonalization.
//!
//! After `k` expansions started from `u₁ = b/‖b‖` the factorization holds
//! `U_{k+1}` (m × (k+1)) and `V_k` (n × k) with orthonormal columns and the
//! lower bidiagonal `B_{k+1,k}` with diagonal `μ₁..μ_k` and subdiagonal
//! `ν₂..ν_{k+1}` such that `A V_k = U_{k+1} B_{k+1,k}`. Consequently
//! `‖A V_k y − b‖ = ‖B_{k+1,k} y − c_k‖` with `c_k = (‖b‖, 0, …, 0)ᵀ`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linop::LinearOperator;
use crate::vecops::{axpy, dot, norm, scale};

/// Relative breakdown threshold, multiplied by `‖A‖_F`.
pub const BREAKDOWN_RTOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expansion {
    /// A new column was appended and the process can continue.
    Grown,
    /// An invariant Krylov subspace was reached. `grown` tells whether a
    /// column was still appended (`ν_{k+1} = 0`) or not (`μ_k = 0`).
    InvariantSubspace { grown: bool },
}

#[derive(Debug, Clone)]
pub struct Bidiagonalization {
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    mu: Vec<f64>,
    /// `nu[i]` is `ν_{i+2}`.
    nu: Vec<f64>,
    rhs_norm: f64,
    breakdown_tol: f64,
    exhausted: bool,
}

/// One modified Gram–Schmidt sweep of `w` against `basis`.
fn reorthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for q in basis {
        let c = dot(q, w);
        axpy(-c, q, w);
    }
}

impl Bidiagonalization {
    /// `k = 0` state holding `u₁ = b/‖b‖`.
    pub fn new<Op: LinearOperator + ?Sized>(op: &Op, b: &[f64]) -> Result<Self> {
        if b.len() != op.nrows() {
            return Err(Error::DimensionMismatch {
                expected: op.nrows(),
                found: b.len(),
            });
        }
        let rhs_norm = norm(b);
        if rhs_norm == 0.0 {
            return Err(Error::DegenerateRhs);
        }
        let mut u1 = b.to_vec();
        scale(1.0 / rhs_norm, &mut u1);
        Ok(Self {
            u: vec![u1],
            v: Vec::new(),
            mu: Vec::new(),
            nu: Vec::new(),
            rhs_norm,
            breakdown_tol: BREAKDOWN_RTOL * op.frobenius_norm(),
            exhausted: false,
        })
    }

    /// Current subspace dimension `k`.
    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn rhs_norm(&self) -> f64 {
        self.rhs_norm
    }

    /// True once no further expansion is possible.
    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `ν₂..ν_{k+1}`
    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn u(&self, i: usize) -> &[f64] {
        &self.u[i]
    }

    pub fn v(&self, i: usize) -> &[f64] {
        &self.v[i]
    }

    /// Number of stored `U` columns that are orthonormal. After a `ν`
    /// breakdown the trailing column is the zero vector.
    pub fn orthonormal_u_count(&self) -> usize {
        match self.nu.last() {
            Some(&0.0) => self.u.len() - 1,
            _ => self.u.len(),
        }
    }

    /// Appends `v_k`, `u_{k+1}`, `μ_k` and `ν_{k+1}`.
    pub fn expand<Op: LinearOperator + ?Sized>(&mut self, op: &Op) -> Result<Expansion> {
        if self.exhausted {
            return Err(Error::KrylovExhausted);
        }
        let k = self.dim();
        let uk = &self.u[k];

        let mut r = op.apply_transpose(uk);
        if let (Some(&nu_k), Some(v_prev)) = (self.nu.last(), self.v.last()) {
            axpy(-nu_k, v_prev, &mut r);
        }
        reorthogonalize(&mut r, &self.v);
        let mu = norm(&r);
        if mu <= self.breakdown_tol {
            self.exhausted = true;
            return Ok(Expansion::InvariantSubspace { grown: false });
        }
        scale(1.0 / mu, &mut r);

        let mut p = op.apply(&r);
        axpy(-mu, uk, &mut p);
        reorthogonalize(&mut p, &self.u);
        let nu = norm(&p);

        self.v.push(r);
        self.mu.push(mu);
        if nu <= self.breakdown_tol {
            self.nu.push(0.0);
            self.u.push(vec![0.0; p.len()]);
            self.exhausted = true;
            return Ok(Expansion::InvariantSubspace { grown: true });
        }
        scale(1.0 / nu, &mut p);
        self.nu.push(nu);
        self.u.push(p);
        if self.dim() == op.ncols() {
            self.exhausted = true;
            return Ok(Expansion::InvariantSubspace { grown: true });
        }
        Ok(Expansion::Grown)
    }

    /// Dense `B_{k+1,k}`.
    pub fn b_matrix(&self) -> DMatrix<f64> {
        let k = self.dim();
        let mut b = DMatrix::zeros(k + 1, k);
        for j in 0..k {
            b[(j, j)] = self.mu[j];
            b[(j + 1, j)] = self.nu[j];
        }
        b
    }

    /// `c_k = (‖b‖, 0, …, 0)ᵀ` of length `k + 1`.
    pub fn c_vector(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.dim() + 1);
        c[0] = self.rhs_norm;
        c
    }

    /// `x = V_k y`
    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.dim());
        let n = self.v.first().map_or(0, Vec::len);
        let mut x = vec![0.0; n];
        for (vj, &yj) in self.v.iter().zip(y) {
            axpy(yj, vj, &mut x);
        }
        x
    }

    /// `‖B_{k+1,k} y − c_k‖`, evaluated in the small space.
    pub fn projected_residual_norm(&self, y: &[f64]) -> f64 {
        let k = self.dim();
        assert_eq!(y.len(), k);
        if k == 0 {
            return self.rhs_norm;
        }
        let mut sum = 0.0;
        for i in 0..=k {
            let mut ri = if i == 0 { -self.rhs_norm } else { 0.0 };
            if i < k {
                ri += self.mu[i] * y[i];
            }
            if i > 0 {
                ri += self.nu[i - 1] * y[i - 1];
            }
            sum += ri * ri;
        }
        libm::sqrt(sum)
    }
}
