//! Linear operators, the first-difference regularization matrix, and the
//! standard-form transform used for priorconditioning.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::vecops::{axpy, dot, norm};

/// A real `m × n` matrix that can be applied forwards and transposed.
///
/// Implementations must be immutable after construction so that shared
/// references can be used from several threads.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// `out = A v`. Panics if `v.len() != ncols` or `out.len() != nrows`.
    fn apply_into(&self, v: &[f64], out: &mut [f64]);

    /// `out = Aᵀ w`. Panics if `w.len() != nrows` or `out.len() != ncols`.
    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]);

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows()];
        self.apply_into(v, &mut out);
        out
    }

    fn apply_transpose(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols()];
        self.apply_transpose_into(w, &mut out);
        out
    }

    /// Column-by-column materialization. Concrete matrices override this.
    fn to_dense(&self) -> DMatrix<f64> {
        let (m, n) = (self.nrows(), self.ncols());
        let mut dense = DMatrix::zeros(m, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; m];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            dense.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        dense
    }

    fn frobenius_norm(&self) -> f64 {
        let n = self.ncols();
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; self.nrows()];
        let mut sum = 0.0;
        for j in 0..n {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            sum += dot(&col, &col);
            e[j] = 0.0;
        }
        libm::sqrt(sum)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        (**self).apply_into(v, out)
    }
    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]) {
        (**self).apply_transpose_into(w, out)
    }
    fn to_dense(&self) -> DMatrix<f64> {
        (**self).to_dense()
    }
    fn frobenius_norm(&self) -> f64 {
        (**self).frobenius_norm()
    }
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.shape().0
    }

    fn ncols(&self) -> usize {
        self.shape().1
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let (m, n) = self.shape();
        assert_eq!(v.len(), n, "operand length must equal column count");
        assert_eq!(out.len(), m, "output length must equal row count");
        out.fill(0.0);
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                axpy(vj, self.column(j).as_slice(), out);
            }
        }
    }

    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]) {
        let (m, n) = self.shape();
        assert_eq!(w.len(), m, "operand length must equal row count");
        assert_eq!(out.len(), n, "output length must equal column count");
        for (j, o) in out.iter_mut().enumerate() {
            *o = dot(self.column(j).as_slice(), w);
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }

    fn frobenius_norm(&self) -> f64 {
        self.norm()
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a CSR matrix from `(row, col, value)` triplets (0-based).
    /// Duplicate positions are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            if i >= nrows {
                return Err(Error::DimensionMismatch {
                    expected: nrows,
                    found: i + 1,
                });
            }
            if j >= ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    found: j + 1,
                });
            }
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut slots = vec![(0usize, 0.0f64); triplets.len()];
        for &(i, j, v) in triplets {
            slots[next[i]] = (j, v);
            next[i] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        for i in 0..nrows {
            let row = &mut slots[counts[i]..counts[i + 1]];
            row.sort_by_key(|&(j, _)| j);
            for &(j, v) in row.iter() {
                if indices.len() > indptr[i] && *indices.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates stored entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            (self.indptr[i]..self.indptr[i + 1]).map(move |p| (i, self.indices[p], self.values[p]))
        })
    }
}

impl LinearOperator for CsrMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(
            v.len(),
            self.ncols,
            "operand length must equal column count"
        );
        assert_eq!(out.len(), self.nrows, "output length must equal row count");
        for (i, o) in out.iter_mut().enumerate() {
            let span = self.indptr[i]..self.indptr[i + 1];
            *o = self.indices[span.clone()]
                .iter()
                .zip(&self.values[span])
                .map(|(&j, &a)| a * v[j])
                .sum();
        }
    }

    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]) {
        assert_eq!(w.len(), self.nrows, "operand length must equal row count");
        assert_eq!(
            out.len(),
            self.ncols,
            "output length must equal column count"
        );
        out.fill(0.0);
        for (i, &wi) in w.iter().enumerate() {
            for p in self.indptr[i]..self.indptr[i + 1] {
                out[self.indices[p]] += self.values[p] * wi;
            }
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let mut dense = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            dense[(i, j)] += v;
        }
        dense
    }

    fn frobenius_norm(&self) -> f64 {
        norm(&self.values)
    }
}

/// An explicitly stored matrix, either dense or sparse.
#[derive(Debug, Clone, PartialEq)]
pub enum Matrix {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

impl Matrix {
    /// Calls `f(row, col, value)` for every stored entry. Dense matrices
    /// report all entries, including zeros.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, usize, f64)) {
        match self {
            Matrix::Dense(a) => {
                for j in 0..a.ncols() {
                    for i in 0..a.nrows() {
                        f(i, j, a[(i, j)]);
                    }
                }
            }
            Matrix::Sparse(a) => a.iter().for_each(|(i, j, v)| f(i, j, v)),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            Matrix::Dense(a) => a.iter().filter(|v| **v != 0.0).count(),
            Matrix::Sparse(a) => a.nnz(),
        }
    }
}

impl LinearOperator for Matrix {
    fn nrows(&self) -> usize {
        match self {
            Matrix::Dense(a) => LinearOperator::nrows(a),
            Matrix::Sparse(a) => a.nrows(),
        }
    }
    fn ncols(&self) -> usize {
        match self {
            Matrix::Dense(a) => LinearOperator::ncols(a),
            Matrix::Sparse(a) => a.ncols(),
        }
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Matrix::Dense(a) => a.apply_into(v, out),
            Matrix::Sparse(a) => a.apply_into(v, out),
        }
    }
    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]) {
        match self {
            Matrix::Dense(a) => a.apply_transpose_into(w, out),
            Matrix::Sparse(a) => a.apply_transpose_into(w, out),
        }
    }
    fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Matrix::Dense(a) => a.clone(),
            Matrix::Sparse(a) => a.to_dense(),
        }
    }
    fn frobenius_norm(&self) -> f64 {
        match self {
            Matrix::Dense(a) => a.norm(),
            Matrix::Sparse(a) => a.frobenius_norm(),
        }
    }
}

/// Square first-difference matrix with `-1` on the diagonal and `+1` on the
/// superdiagonal. Always invertible; `L⁻¹` is never formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DifferenceMatrix {
    n: usize,
}

impl DifferenceMatrix {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "regularization matrix needs a positive dimension");
        Self { n }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `L v`
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        let mut out: Vec<f64> = v.iter().map(|x| -x).collect();
        for i in 0..self.n - 1 {
            out[i] += v[i + 1];
        }
        out
    }

    /// Solves `L z = w` by back substitution.
    pub fn solve(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.n);
        let mut z = vec![0.0; self.n];
        z[self.n - 1] = -w[self.n - 1];
        for i in (0..self.n - 1).rev() {
            z[i] = z[i + 1] - w[i];
        }
        z
    }

    /// Solves `Lᵀ z = w` by forward substitution.
    pub fn solve_transpose(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.n);
        let mut z = vec![0.0; self.n];
        z[0] = -w[0];
        for i in 1..self.n {
            z[i] = z[i - 1] - w[i];
        }
        z
    }
}

/// `Ā = A L⁻¹` together with the shift `x₀`, so that the general-form
/// problem `min ‖Ax − b‖² + α‖L(x − x₀)‖²` becomes a standard-form problem
/// in `z = L(x − x₀)` with right-hand side `r₀ = b − A x₀`.
#[derive(Debug, Clone)]
pub struct Priorconditioned<Op> {
    base: Op,
    reg: DifferenceMatrix,
    shift: Vec<f64>,
}

impl<Op: LinearOperator> Priorconditioned<Op> {
    pub fn new(base: Op, reg: DifferenceMatrix, shift: Vec<f64>) -> Result<Self> {
        let n = base.ncols();
        if reg.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: reg.dim(),
            });
        }
        if shift.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: shift.len(),
            });
        }
        Ok(Self { base, reg, shift })
    }

    /// Zero shift.
    pub fn unshifted(base: Op, reg: DifferenceMatrix) -> Result<Self> {
        let n = base.ncols();
        Self::new(base, reg, vec![0.0; n])
    }

    pub fn base(&self) -> &Op {
        &self.base
    }

    pub fn regularization(&self) -> DifferenceMatrix {
        self.reg
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// `x₀ + L⁻¹ z`
    pub fn recover(&self, z: &[f64]) -> Vec<f64> {
        let mut x = self.reg.solve(z);
        axpy(1.0, &self.shift, &mut x);
        x
    }

    /// `L (x − x₀)`
    pub fn to_standard(&self, x: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = x.iter().zip(&self.shift).map(|(a, b)| a - b).collect();
        self.reg.apply(&diff)
    }

    /// `b − A x₀`
    pub fn effective_rhs(&self, b: &[f64]) -> Vec<f64> {
        let ax0 = self.base.apply(&self.shift);
        b.iter().zip(&ax0).map(|(bi, ai)| bi - ai).collect()
    }
}

impl<Op: LinearOperator> LinearOperator for Priorconditioned<Op> {
    fn nrows(&self) -> usize {
        self.base.nrows()
    }

    fn ncols(&self) -> usize {
        self.base.ncols()
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let w = self.reg.solve(v);
        self.base.apply_into(&w, out);
    }

    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]) {
        let t = self.base.apply_transpose(w);
        out.copy_from_slice(&self.reg.solve_transpose(&t));
    }
}

/// Columns above which [`normal_equation_solve`] switches from a dense
/// Cholesky factorization to conjugate gradients.
pub const DENSE_NORMAL_LIMIT: usize = 2000;

/// Relative residual target `‖(AᵀA + αI)x − Aᵀb‖ ≤ tol·‖Aᵀb‖`.
pub const NORMAL_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalSolver {
    /// Dense up to [`DENSE_NORMAL_LIMIT`] columns, CG above.
    Auto,
    Dense,
    ConjugateGradient {
        max_iter: usize,
    },
}

/// Solves the Tikhonov normal equations `(AᵀA + αI) x = Aᵀb`.
pub fn normal_equation_solve<Op: LinearOperator + ?Sized>(
    op: &Op,
    b: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    normal_equation_solve_with(op, b, alpha, NormalSolver::Auto)
}

pub fn normal_equation_solve_with<Op: LinearOperator + ?Sized>(
    op: &Op,
    b: &[f64],
    alpha: f64,
    method: NormalSolver,
) -> Result<Vec<f64>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    if b.len() != op.nrows() {
        return Err(Error::DimensionMismatch {
            expected: op.nrows(),
            found: b.len(),
        });
    }
    let n = op.ncols();
    let atb = op.apply_transpose(b);
    let atb_norm = norm(&atb);
    if atb_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let target = NORMAL_RESIDUAL_TOL * atb_norm;

    match method {
        NormalSolver::Dense => dense_normal_solve(op, &atb, alpha, target),
        NormalSolver::ConjugateGradient { max_iter } => {
            cg_normal_solve(op, &atb, alpha, target, max_iter)
        }
        NormalSolver::Auto if n <= DENSE_NORMAL_LIMIT => {
            dense_normal_solve(op, &atb, alpha, target)
        }
        NormalSolver::Auto => cg_normal_solve(op, &atb, alpha, target, 10 * n),
    }
}

/// `(AᵀA + αI) x − Aᵀb`
fn normal_residual<Op: LinearOperator + ?Sized>(
    op: &Op,
    atb: &[f64],
    alpha: f64,
    x: &[f64],
) -> Vec<f64> {
    let mut r = op.apply_transpose(&op.apply(x));
    for ((ri, xi), gi) in r.iter_mut().zip(x).zip(atb) {
        *ri += alpha * xi - gi;
    }
    r
}

fn dense_normal_solve<Op: LinearOperator + ?Sized>(
    op: &Op,
    atb: &[f64],
    alpha: f64,
    target: f64,
) -> Result<Vec<f64>> {
    let a = op.to_dense();
    let mut gram = a.tr_mul(&a);
    for i in 0..gram.nrows() {
        gram[(i, i)] += alpha;
    }
    let chol = gram.cholesky().ok_or(Error::ConvergenceFailure {
        achieved: f64::INFINITY,
    })?;
    let mut x = chol.solve(&DVector::from_column_slice(atb));

    // A couple of refinement sweeps recover the last digits when α is tiny
    // relative to ‖A‖².
    let mut res = normal_residual(op, atb, alpha, x.as_slice());
    let mut res_norm = norm(&res);
    for _ in 0..3 {
        if res_norm <= target {
            break;
        }
        let corr = chol.solve(&DVector::from_vec(res));
        x -= corr;
        res = normal_residual(op, atb, alpha, x.as_slice());
        res_norm = norm(&res);
    }
    if res_norm <= target {
        Ok(x.data.into())
    } else {
        Err(Error::ConvergenceFailure {
            achieved: res_norm / (target / NORMAL_RESIDUAL_TOL),
        })
    }
}

fn cg_normal_solve<Op: LinearOperator + ?Sized>(
    op: &Op,
    atb: &[f64],
    alpha: f64,
    target: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = atb.len();
    let mut x = vec![0.0; n];
    let mut r = atb.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..max_iter {
        if libm::sqrt(rr) <= target {
            break;
        }
        let mut q = op.apply_transpose(&op.apply(&p));
        axpy(alpha, &p, &mut q);
        let step = rr / dot(&p, &q);
        axpy(step, &p, &mut x);
        axpy(-step, &q, &mut r);
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    // The recurrence drifts from the true residual; judge by the latter.
    let achieved = norm(&normal_residual(op, atb, alpha, &x));
    if achieved <= target {
        Ok(x)
    } else {
        Err(Error::ConvergenceFailure {
            achieved: achieved / (target / NORMAL_RESIDUAL_TOL),
        })
    }
}
