//! Tensor Bures-Wasserstein distance.
//!
//! `d(A, B)^2 = sum_i [ tr A_i + tr B_i - 2 tr (A_i^{1/2} B_i A_i^{1/2})^{1/2} ]`
//! over the Fourier slices of `A` and `B`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Operand, Result};
use crate::fourier::{cmat_sqrt_direct, cmat_svd, cmat_trace, dft_mode3, mul, ComplexMatrix};
use crate::solver::{db_sqrt_matrix, newton_sqrt_matrix, IterationConfig};
use crate::tensor::Tensor3;

/// How the inner matrix square roots are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerSqrt {
    #[default]
    Direct,
    Newton,
    Db,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TbwOptions {
    pub strategy: InnerSqrt,
    /// Evaluate slices `0..=p/2` only and reuse them for their conjugate mirrors.
    pub mirror: bool,
}

impl Default for TbwOptions {
    fn default() -> Self {
        Self {
            strategy: InnerSqrt::Direct,
            mirror: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceBw {
    pub trace_a: f64,
    pub trace_b: f64,
    pub trace_cross_sqrt: f64,
    pub d_squared: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TbwReport {
    pub per_slice: Vec<SliceBw>,
    pub total: f64,
}

impl TbwReport {
    /// CSV `slice,trace_a,trace_b,trace_cross_sqrt,d_squared` with 1-based
    /// slice numbers and a trailing `total` line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("slice,trace_a,trace_b,trace_cross_sqrt,d_squared\n");
        for (i, s) in self.per_slice.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                i + 1,
                s.trace_a,
                s.trace_b,
                s.trace_cross_sqrt,
                s.d_squared
            );
        }
        let _ = writeln!(out, "total,,,,{}", self.total);
        out
    }
}

/// Rounding slack under which a negative `d^2` is clamped to zero.
const CLAMP_TOL: f64 = 1e-10;

fn inner_sqrt(m: &ComplexMatrix, strategy: InnerSqrt) -> Result<ComplexMatrix> {
    match strategy {
        InnerSqrt::Direct => cmat_sqrt_direct(m),
        InnerSqrt::Newton | InnerSqrt::Db => {
            // Both iterations need a positive definite argument; check once here.
            cmat_sqrt_direct(m)?;
            let cfg = IterationConfig {
                tolerance: 1e-13 * m.frobenius_norm().max(1.0),
                ..IterationConfig::default()
            };
            let x = if strategy == InnerSqrt::Newton {
                newton_sqrt_matrix(m, &cfg)?.0
            } else {
                db_sqrt_matrix(m, &cfg)?.0
            };
            Ok(x.hermitian_part())
        }
    }
}

fn real_trace(m: &ComplexMatrix) -> f64 {
    cmat_trace(m).re
}

fn slice_terms(a: &ComplexMatrix, b: &ComplexMatrix, strategy: InnerSqrt) -> Result<SliceBw> {
    if !a.is_square() || a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "Bures-Wasserstein needs equal square matrices, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let ra = inner_sqrt(a, strategy).map_err(|e| pd_error(e).with_operand(Operand::A))?;
    let rb = inner_sqrt(b, strategy).map_err(|e| pd_error(e).with_operand(Operand::B))?;
    let cross = mul(&mul(&ra, b), &ra).hermitian_part();
    let rc = inner_sqrt(&cross, strategy)?;
    let (trace_a, trace_b, trace_cross_sqrt) = (real_trace(a), real_trace(b), real_trace(&rc));
    // d^2 = min_U ||A^{1/2} - B^{1/2} U||_F^2, attained at the polar factor of
    // B^{1/2} A^{1/2}. Summing squares avoids the cancellation in the trace
    // form, which leaves d(a, a) at sqrt(rounding) instead of zero.
    let (w, _, v) = cmat_svd(&mul(&rb, &ra));
    let polar = mul(&w, &v.adjoint());
    let d_squared = ra.sub(&mul(&rb, &polar)).frobenius_norm_sq();
    let trace_form = trace_a + trace_b - 2.0 * trace_cross_sqrt;
    if trace_form < -CLAMP_TOL * (trace_a + trace_b).max(1.0) {
        return Err(Error::InvalidInput(format!(
            "negative squared distance {trace_form:e}"
        )));
    }
    Ok(SliceBw {
        trace_a,
        trace_b,
        trace_cross_sqrt,
        d_squared,
    })
}

fn pd_error(e: Error) -> Error {
    match e {
        Error::NotHermitian { .. } => Error::not_pd(None),
        other => other,
    }
}

/// Squared Bures-Wasserstein distance between two Hermitian positive definite
/// matrices.
pub fn bw_distance_sq_matrix(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    slice_terms(a, b, InnerSqrt::Direct)
        .map(|s| s.d_squared)
        .map_err(pd_error)
}

pub fn tbw_report_with(a: &Tensor3, b: &Tensor3, opts: &TbwOptions) -> Result<TbwReport> {
    if a.dims() != b.dims() || !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "TBW needs equal square tensors, got {:?} and {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let (ah, bh) = (dft_mode3(a), dft_mode3(b));
    let p = ah.p();
    let computed = if opts.mirror { p / 2 + 1 } else { p };
    let mut per_slice = Vec::with_capacity(p);
    for i in 0..computed {
        let terms = slice_terms(ah.slice(i), bh.slice(i), opts.strategy).map_err(|e| {
            match pd_error(e) {
                Error::NotPositiveDefinite { which, .. } => Error::NotPositiveDefinite {
                    which,
                    slice: Some(i),
                },
                other => other,
            }
        })?;
        per_slice.push(terms);
    }
    for i in computed..p {
        per_slice.push(per_slice[p - i]);
    }
    let total = per_slice.iter().map(|s| s.d_squared).sum::<f64>().sqrt();
    Ok(TbwReport { per_slice, total })
}

pub fn tbw_report(a: &Tensor3, b: &Tensor3) -> Result<TbwReport> {
    tbw_report_with(a, b, &TbwOptions::default())
}

pub fn tbw_distance(a: &Tensor3, b: &Tensor3) -> Result<f64> {
    Ok(tbw_report(a, b)?.total)
}
