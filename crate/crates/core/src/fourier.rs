//! Dense complex matrix kernels and the DFT along the third (tube) mode.
//!
//! The T-product of two tensors is block-circulant matrix multiplication, and a
//! DFT along mode 3 block-diagonalizes every block-circulant matrix. Everything
//! in this crate therefore reduces to `p` independent `n x n` complex matrix
//! problems, which the kernels here solve.
//!
//! Convention: the forward transform is unnormalized and the inverse carries the
//! `1/p` factor, so `||t||_F^2 = (1/p) * sum_i ||T_i||_F^2`.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Absolute tolerance on `max |a - a^H|` for Hermitian preconditions.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Relative pivot threshold below which a matrix is treated as singular.
pub const PIVOT_TOL: f64 = 1e-14;
/// Relative eigenvalue floor for positive definiteness in `cmat_sqrt_direct`.
pub const PD_TOL: f64 = 1e-12;
/// The inverse DFT rejects imaginary residue above this fraction of `||s||_F`.
pub const IMAG_RESIDUE_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Builds a real matrix from nested rows; panics on ragged input.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows[0].as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            assert_eq!(row.len(), cols, "ragged rows");
            data.extend(row.iter().map(|&x| C64::new(x, 0.0)));
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `(self + other) / 2`, the update shape shared by both square-root iterations.
    pub fn midpoint(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a + b) * 0.5)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// `(A + A^H) / 2`.
    pub fn hermitian_part(&self) -> Self {
        debug_assert!(self.is_square());
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        out
    }

    /// Largest entry of `|A - A^H|`; infinite for non-square input.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_asymmetry() <= tol
    }

    fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn cmat_mul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = ComplexMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == ZERO {
                continue;
            }
            let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// Product of square conformable matrices inside the solvers, where the
/// dimensions are guaranteed by construction.
pub(crate) fn mul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    cmat_mul(a, b).expect("conformable by construction")
}

/// Inverse by LU factorization with partial pivoting.
///
/// Fails with `SingularSlice` (no index; callers attach one) when a pivot falls
/// below `PIVOT_TOL * max|a_ij|`.
pub fn cmat_inv(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "cannot invert a {}x{} matrix",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let scale = a.max_abs();
    if !scale.is_finite() || scale == 0.0 {
        return Err(Error::singular(None));
    }
    let threshold = PIVOT_TOL * scale;
    let mut lu = a.data.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let (pivot_row, pivot_abs) = (k..n)
            .map(|i| (i, lu[i * n + k].norm()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pivot_abs > threshold) {
            return Err(Error::singular(None));
        }
        if pivot_row != k {
            for j in 0..n {
                lu.swap(k * n + j, pivot_row * n + j);
            }
            perm.swap(k, pivot_row);
        }
        let pivot = lu[k * n + k];
        for i in k + 1..n {
            let l = lu[i * n + k] / pivot;
            lu[i * n + k] = l;
            if l == ZERO {
                continue;
            }
            for j in k + 1..n {
                let ukj = lu[k * n + j];
                lu[i * n + j] -= l * ukj;
            }
        }
    }

    // P A = L U, so column j of A^{-1} solves L U x = P e_j.
    let mut inv = ComplexMatrix::zeros(n, n);
    let mut x = vec![ZERO; n];
    for col in 0..n {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = if perm[i] == col { ONE } else { ZERO };
        }
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= lu[i * n + k] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= lu[i * n + k] * x[k];
            }
            x[i] = s / lu[i * n + i];
        }
        for i in 0..n {
            inv[(i, col)] = x[i];
        }
    }
    Ok(inv)
}

pub fn cmat_trace(a: &ComplexMatrix) -> C64 {
    (0..a.rows.min(a.cols)).map(|i| a[(i, i)]).sum()
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Non-increasing.
    pub values: Vec<f64>,
    /// Unitary; column `k` belongs to `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V f(diag(values)) V^H`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = ZERO;
                for k in 0..n {
                    s += v[(i, k)] * fv[k] * v[(j, k)].conj();
                }
                out[(i, j)] = s;
            }
        }
        out
    }
}

/// Unitary 2x2 plane rotation `[[pp, pq], [qp, qq]]` that zeroes the `(p, q)`
/// entry of the Hermitian 2x2 block `[[app, apq], [conj(apq), aqq]]` under
/// `J^H B J`.
#[derive(Clone, Copy)]
struct PlaneRotation {
    pp: C64,
    pq: C64,
    qp: C64,
    qq: C64,
}

impl PlaneRotation {
    fn annihilating(app: f64, aqq: f64, apq: C64) -> Option<Self> {
        let magnitude = apq.norm();
        if magnitude == 0.0 || !magnitude.is_finite() {
            return None;
        }
        let phase_conj = (apq / magnitude).conj();
        let tau = (aqq - app) / (2.0 * magnitude);
        let t = if tau >= 0.0 {
            1.0 / (tau + (1.0 + tau * tau).sqrt())
        } else {
            -1.0 / (-tau + (1.0 + tau * tau).sqrt())
        };
        let c = 1.0 / (1.0 + t * t).sqrt();
        let s = t * c;
        Some(Self {
            pp: C64::new(c, 0.0),
            pq: C64::new(s, 0.0),
            qp: phase_conj * (-s),
            qq: phase_conj * c,
        })
    }

    /// `M <- M J` restricted to columns p, q.
    fn apply_right(&self, m: &mut ComplexMatrix, p: usize, q: usize) {
        for k in 0..m.rows {
            let mkp = m[(k, p)];
            let mkq = m[(k, q)];
            m[(k, p)] = mkp * self.pp + mkq * self.qp;
            m[(k, q)] = mkp * self.pq + mkq * self.qq;
        }
    }

    /// `M <- J^H M` restricted to rows p, q.
    fn apply_left_adjoint(&self, m: &mut ComplexMatrix, p: usize, q: usize) {
        for k in 0..m.cols {
            let mpk = m[(p, k)];
            let mqk = m[(q, k)];
            m[(p, k)] = self.pp.conj() * mpk + self.qp.conj() * mqk;
            m[(q, k)] = self.pq.conj() * mpk + self.qq.conj() * mqk;
        }
    }
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let mut s = 0.0;
    for i in 0..m.rows {
        for j in 0..m.cols {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Hermitian eigensolver (cyclic complex Jacobi).
///
/// Eigenvalues come back in non-increasing order; ties keep the order in which
/// the Jacobi sweep left them, so results are deterministic.
pub fn cmat_herm_eig(a: &ComplexMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let asym = a.max_asymmetry();
    if !(asym <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian {
            max_asymmetry: asym,
        });
    }
    let n = a.rows;
    let mut m = a.hermitian_part();
    for i in 0..n {
        m[(i, i)].im = 0.0;
    }
    let mut v = ComplexMatrix::identity(n);
    let total = m.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = off_diagonal_norm(&m);
        if off <= f64::EPSILON * 1e-2 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                // Entries already below rounding of their diagonal are left alone.
                if apq.norm() <= f64::EPSILON * 1e-3 * (m[(p, p)].re.abs() + m[(q, q)].re.abs())
                {
                    m[(p, q)] = ZERO;
                    m[(q, p)] = ZERO;
                    continue;
                }
                let Some(rot) = PlaneRotation::annihilating(m[(p, p)].re, m[(q, q)].re, apq)
                else {
                    continue;
                };
                rot.apply_right(&mut m, p, q);
                rot.apply_left_adjoint(&mut m, p, q);
                rot.apply_right(&mut v, p, q);
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)].im = 0.0;
                m[(q, q)].im = 0.0;
            }
        }
    }

    let raw: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps ties in column order.
    order.sort_by(|&i, &j| raw[j].total_cmp(&raw[i]));
    let values = order.iter().map(|&i| raw[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, dst)] = v[(i, src)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

fn positive_definite_eig(a: &ComplexMatrix) -> Result<HermitianEigen> {
    let eig = cmat_herm_eig(a)?;
    let max = eig.values[0];
    let min = *eig.values.last().expect("non-empty");
    if !(max > 0.0) || !(min > PD_TOL * max) {
        return Err(Error::not_pd(None));
    }
    Ok(eig)
}

/// Principal square root of a Hermitian positive definite matrix,
/// `V diag(sqrt(lambda)) V^H`.
pub fn cmat_sqrt_direct(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(positive_definite_eig(a)?.reconstruct_with(f64::sqrt))
}

/// Inverse principal square root of a Hermitian positive definite matrix.
pub fn cmat_inv_sqrt_direct(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(positive_definite_eig(a)?.reconstruct_with(|l| 1.0 / l.sqrt()))
}

/// Principal square root of a general (not necessarily Hermitian) matrix whose
/// spectrum avoids the closed negative real axis.
///
/// Complex Schur form `A = Q T Q^H`, then the triangular recurrence
/// `R_ii = sqrt(T_ii)`, `R_ij = (T_ij - sum_k R_ik R_kj) / (R_ii + R_jj)`.
pub fn cmat_sqrt_schur(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "square root needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let dense = nalgebra::DMatrix::<C64>::from_row_slice(n, n, &a.data);
    let schur = nalgebra::linalg::Schur::try_new(dense, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::InvalidInput("Schur iteration did not converge".into()))?;
    let (mut q, mut t) = schur.unpack();
    triangularize_blocks(&mut t, &mut q);

    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let mut r = nalgebra::DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        let d = t[(i, i)];
        if d.norm() <= PD_TOL * scale || (d.im.abs() <= PD_TOL * scale && d.re < 0.0) {
            return Err(Error::not_pd(None));
        }
        r[(i, i)] = d.sqrt();
    }
    for j in 0..n {
        for i in (0..j).rev() {
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = s / (r[(i, i)] + r[(j, j)]);
        }
    }
    let x = &q * r * q.adjoint();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = x[(i, j)];
        }
    }
    Ok(out)
}

/// Removes any remaining 2x2 diagonal blocks from a quasi-triangular Schur
/// factor by a unitary rotation onto an eigenvector of the block.
fn triangularize_blocks(t: &mut nalgebra::DMatrix<C64>, q: &mut nalgebra::DMatrix<C64>) {
    let n = t.nrows();
    let mut i = 0;
    while i + 1 < n {
        let sub = t[(i + 1, i)];
        let scale = t[(i, i)].norm() + t[(i + 1, i + 1)].norm();
        if sub.norm() <= f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
            t[(i + 1, i)] = ZERO;
            i += 1;
            continue;
        }
        let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], sub, t[(i + 1, i + 1)]);
        let half_tr = (a + d) * 0.5;
        let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
        let lambda = half_tr + disc;
        // Eigenvector of [[a, b], [c, d]] for lambda.
        let (mut x, mut y) = (lambda - d, c);
        if x.norm() + y.norm() <= f64::EPSILON * scale {
            x = b;
            y = lambda - a;
        }
        let norm = (x.norm_sqr() + y.norm_sqr()).sqrt();
        let (x, y) = (x / norm, y / norm);
        // G = [[x, -conj(y)], [y, conj(x)]] is unitary with first column the eigenvector.
        let g = [[x, -y.conj()], [y, x.conj()]];
        for k in 0..n {
            let (tki, tkj) = (t[(k, i)], t[(k, i + 1)]);
            t[(k, i)] = tki * g[0][0] + tkj * g[1][0];
            t[(k, i + 1)] = tki * g[0][1] + tkj * g[1][1];
            let (qki, qkj) = (q[(k, i)], q[(k, i + 1)]);
            q[(k, i)] = qki * g[0][0] + qkj * g[1][0];
            q[(k, i + 1)] = qki * g[0][1] + qkj * g[1][1];
        }
        for k in 0..n {
            let (tik, tjk) = (t[(i, k)], t[(i + 1, k)]);
            t[(i, k)] = g[0][0].conj() * tik + g[1][0].conj() * tjk;
            t[(i + 1, k)] = g[0][1].conj() * tik + g[1][1].conj() * tjk;
        }
        t[(i + 1, i)] = ZERO;
        i += 1;
    }
}

/// Square root with the cheapest applicable kernel: the eigen route for
/// Hermitian input, the Schur route otherwise.
pub fn cmat_sqrt_principal(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let scale = a.max_abs().max(1.0);
    if a.is_hermitian(HERMITIAN_TOL * scale) {
        cmat_sqrt_direct(&a.hermitian_part())
    } else {
        cmat_sqrt_schur(a)
    }
}

/// Orthonormal complex basis from Gram-Schmidt on the columns of `m`,
/// completed with standard basis vectors when `m` is rank deficient.
pub(crate) fn orthonormal_columns(columns: Vec<Vec<C64>>, dim: usize) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(dim);
    let candidates = columns
        .into_iter()
        .chain((0..dim).map(|e| (0..dim).map(|i| if i == e { ONE } else { ZERO }).collect()));
    for mut v in candidates {
        if basis.len() == dim {
            break;
        }
        let original = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if original == 0.0 {
            continue;
        }
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for b in &basis {
                let proj: C64 = b.iter().zip(&v).map(|(bi, vi)| bi.conj() * vi).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= proj * bi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 * original {
            basis.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    basis
}

/// Thin complex SVD by one-sided Jacobi: returns `(U, sigma, V)` with `U` `n x n`
/// unitary, `sigma` non-increasing of length `min(n, m)`, `V` `m x m` unitary and
/// `A = U diag(sigma) V^H`.
pub(crate) fn cmat_svd(a: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>, ComplexMatrix) {
    if a.rows < a.cols {
        let (u, s, v) = cmat_svd(&a.adjoint());
        return (v, s, u);
    }
    let (n, m) = (a.rows, a.cols);
    let mut w = a.clone();
    let mut v = ComplexMatrix::identity(m);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, ZERO);
                for i in 0..n {
                    alpha += w[(i, p)].norm_sqr();
                    beta += w[(i, q)].norm_sqr();
                    gamma += w[(i, p)].conj() * w[(i, q)];
                }
                if gamma.norm() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                if let Some(rot) = PlaneRotation::annihilating(alpha, beta, gamma) {
                    rot.apply_right(&mut w, p, q);
                    rot.apply_right(&mut v, p, q);
                    rotated = true;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|i| w[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let tiny = f64::EPSILON * sigma.first().copied().unwrap_or(0.0) * (n.max(m) as f64);
    let left: Vec<Vec<C64>> = order
        .iter()
        .filter(|&&j| norms[j] > tiny)
        .map(|&j| w.column(j).into_iter().map(|z| z / norms[j]).collect())
        .collect();
    let basis = orthonormal_columns(left, n);
    let mut u = ComplexMatrix::zeros(n, n);
    for (j, col) in basis.iter().enumerate() {
        for i in 0..n {
            u[(i, j)] = col[i];
        }
    }
    let mut v_sorted = ComplexMatrix::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..m {
            v_sorted[(i, dst)] = v[(i, src)];
        }
    }
    (u, sigma, v_sorted)
}

/// Frontal slices of a tensor after the DFT along mode 3.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralTensor {
    n: usize,
    m: usize,
    slices: Vec<ComplexMatrix>,
}

impl SpectralTensor {
    pub fn from_slices(slices: Vec<ComplexMatrix>) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::DimensionMismatch("a spectral tensor needs p >= 1 slices".into()))?;
        let (n, m) = (first.rows(), first.cols());
        if slices.iter().any(|s| s.rows() != n || s.cols() != m) {
            return Err(Error::DimensionMismatch(
                "spectral slices must share dimensions".into(),
            ));
        }
        Ok(Self { n, m, slices })
    }

    /// Every slice equal to `I_n`: the spectrum of the identity tensor.
    pub fn identity(n: usize, p: usize) -> Self {
        Self {
            n,
            m: n,
            slices: vec![ComplexMatrix::identity(n); p],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n, self.m, self.slices.len())
    }

    pub fn p(&self) -> usize {
        self.slices.len()
    }

    pub fn slices(&self) -> &[ComplexMatrix] {
        &self.slices
    }

    pub fn slice(&self, i: usize) -> &ComplexMatrix {
        &self.slices[i]
    }

    pub fn into_slices(self) -> Vec<ComplexMatrix> {
        self.slices
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.slices
            .iter()
            .map(ComplexMatrix::frobenius_norm_sq)
            .sum::<f64>()
            .sqrt()
    }

    /// Applies `f` to every slice independently.
    pub fn map_slices<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(usize, &ComplexMatrix) -> Result<ComplexMatrix> + Sync,
    {
        let slices = self
            .slices
            .par_iter()
            .enumerate()
            .map(|(i, s)| f(i, s).map_err(|e| e.at_slice(i)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_slices(slices)
    }

    /// Applies `f` to slices `0..=p/2` and fills the rest by conjugate mirroring.
    ///
    /// Only valid for maps that commute with conjugation (matrix functions with
    /// real Taylor coefficients) applied to the spectrum of a real tensor.
    pub fn map_slices_mirrored<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(usize, &ComplexMatrix) -> Result<ComplexMatrix>,
    {
        let p = self.p();
        let mut slices: Vec<Option<ComplexMatrix>> = vec![None; p];
        for i in 0..=p / 2 {
            slices[i] = Some(f(i, &self.slices[i]).map_err(|e| e.at_slice(i))?);
        }
        for i in p / 2 + 1..p {
            slices[i] = Some(slices[p - i].as_ref().expect("filled").conj());
        }
        Self::from_slices(slices.into_iter().map(|s| s.expect("filled")).collect())
    }

    /// Largest deviation from `slice(p - i) = conj(slice(i))`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let p = self.p();
        let mut worst = self.slices[0].max_imag_abs();
        for i in 1..p {
            let mirrored = &self.slices[p - i];
            let d = self.slices[i].sub(&mirrored.conj()).max_abs();
            worst = worst.max(d);
        }
        worst
    }
}

/// Unnormalized forward DFT of every mode-3 tube.
pub fn dft_mode3(t: &Tensor3) -> SpectralTensor {
    let (n, m, p) = t.dims();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(p);
    // Tube-major buffer: one contiguous length-p chunk per (i, j).
    let mut buf = vec![ZERO; n * m * p];
    for k in 0..p {
        let slice = t.frontal(k);
        for (ij, &x) in slice.iter().enumerate() {
            buf[ij * p + k] = C64::new(x, 0.0);
        }
    }
    fft.process(&mut buf);
    let mut slices = vec![ComplexMatrix::zeros(n, m); p];
    for (ij, tube) in buf.chunks_exact(p).enumerate() {
        for (k, &z) in tube.iter().enumerate() {
            slices[k].data[ij] = z;
        }
    }
    SpectralTensor { n, m, slices }
}

/// Inverse DFT along mode 3 (with the `1/p` factor), returning the real part.
///
/// Fails when the imaginary residue exceeds `IMAG_RESIDUE_TOL * ||s||_F`, which
/// means the spectrum was not the transform of a real tensor.
pub fn idft_mode3(s: &SpectralTensor) -> Result<Tensor3> {
    let (n, m, p) = s.dims();
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(p);
    let mut buf = vec![ZERO; n * m * p];
    for (k, slice) in s.slices.iter().enumerate() {
        for (ij, &z) in slice.data.iter().enumerate() {
            buf[ij * p + k] = z;
        }
    }
    fft.process(&mut buf);
    let inv_p = 1.0 / p as f64;
    let mut data = vec![0.0; n * m * p];
    let mut max_imag: f64 = 0.0;
    for (ij, tube) in buf.chunks_exact(p).enumerate() {
        for (k, &z) in tube.iter().enumerate() {
            data[k * n * m + ij] = z.re * inv_p;
            max_imag = max_imag.max((z.im * inv_p).abs());
        }
    }
    let threshold = IMAG_RESIDUE_TOL * s.frobenius_norm();
    if max_imag > threshold || !max_imag.is_finite() {
        return Err(Error::ResidualImaginaryTooLarge {
            max_imag,
            threshold,
        });
    }
    Tensor3::new(n, m, p, data)
}
