//! Iterative principal T-square roots.
//!
//! Both iterations run slice-wise on the mode-3 spectrum:
//!
//! * Newton: `X <- (X + A X^{-1}) / 2`, `X_0 = A`.
//! * Denman-Beavers: `X <- (X + Y^{-1}) / 2`, `Y <- (Y + X^{-1}) / 2` (both
//!   from the previous pair), `X_0 = A`, `Y_0 = I`. `Y` converges to `A^{-1/2}`.
//!
//! In exact arithmetic the two produce the same `X_k`. In floating point Newton
//! amplifies rounding after convergence by roughly `(sqrt(kappa) - 1) / 2` per
//! step, while Denman-Beavers stays at its floor.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{
    cmat_inv, dft_mode3, idft_mode3, mul, orthonormal_columns, ComplexMatrix,
    SpectralTensor, C64,
};
use crate::tensor::{self, Tensor3};

/// Relative tolerance for the positive-definiteness precondition.
pub const INPUT_PD_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub early_stop: bool,
    /// Replace each iterate slice by `(M + M^H)/2`. Only takes effect when every
    /// input slice is Hermitian.
    pub hermitian_projection: bool,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-12,
            early_stop: true,
            hermitian_projection: true,
        }
    }
}

impl IterationConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be at least 1".into()));
        }
        if !(self.tolerance >= 0.0) || !self.tolerance.is_finite() {
            return Err(Error::InvalidInput(format!(
                "tolerance must be finite and non-negative, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    /// `r_0 ..= r_K`.
    pub residuals: Vec<f64>,
    /// `rho[k-1] = r_k / r_{k-1}`; `None` where `r_{k-1} = 0`.
    pub rho: Vec<Option<f64>>,
    /// `q[k-1] = r_k / r_{k-1}^2`; `None` where `r_{k-1} = 0`.
    pub q: Vec<Option<f64>>,
    pub converged: bool,
    /// Number of updates applied, `K`.
    pub iterations_run: usize,
}

impl ConvergenceTrace {
    pub fn from_residuals(residuals: Vec<f64>, converged: bool) -> Self {
        let (rho, q) = convergence_ratios(&residuals);
        let iterations_run = residuals.len().saturating_sub(1);
        Self {
            residuals,
            rho,
            q,
            converged,
            iterations_run,
        }
    }

    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().expect("trace holds r_0")
    }

    /// CSV with header `k,residual,rho,q`; ratios at `k = 0` are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,residual,rho,q\n");
        for (k, r) in self.residuals.iter().enumerate() {
            let (rho, q) = if k == 0 {
                (None, None)
            } else {
                (self.rho[k - 1], self.q[k - 1])
            };
            let _ = writeln!(out, "{k},{r},{},{}", fmt_opt(rho), fmt_opt(q));
        }
        out
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// First- and second-order ratios of a residual sequence.
pub fn convergence_ratios(residuals: &[f64]) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
    residuals
        .windows(2)
        .map(|w| {
            if w[0] == 0.0 {
                (None, None)
            } else {
                (Some(w[1] / w[0]), Some(w[1] / (w[0] * w[0])))
            }
        })
        .unzip()
}

#[derive(Clone, Debug)]
pub struct SqrtSolution {
    pub sqrt: Tensor3,
    /// Present for Denman-Beavers only.
    pub inv_sqrt: Option<Tensor3>,
    pub trace: ConvergenceTrace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SqrtMethod {
    Newton,
    Db,
    Direct,
}

impl FromStr for SqrtMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "newton" => Ok(Self::Newton),
            "db" | "denman-beavers" => Ok(Self::Db),
            "direct" => Ok(Self::Direct),
            other => Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for SqrtMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Newton => "newton",
            Self::Db => "db",
            Self::Direct => "direct",
        })
    }
}

/// `sqrt(sum_i ||X_i X_i - A_i||_F^2)` over Fourier slices in index order, with
/// no `1/p` correction.
pub fn spectral_residual(a: &SpectralTensor, x: &SpectralTensor) -> f64 {
    let parts: Vec<f64> = a
        .slices()
        .par_iter()
        .zip(x.slices().par_iter())
        .map(|(ai, xi)| mul(xi, xi).sub(ai).frobenius_norm_sq())
        .collect();
    // Fixed-order reduction keeps traces bitwise reproducible.
    parts.iter().sum::<f64>().sqrt()
}

pub fn residual(a: &Tensor3, x: &Tensor3) -> Result<f64> {
    if !a.is_square() || a.dims() != x.dims() {
        return Err(Error::DimensionMismatch(format!(
            "residual needs equal square tensors, got {:?} and {:?}",
            a.dims(),
            x.dims()
        )));
    }
    Ok(spectral_residual(&dft_mode3(a), &dft_mode3(x)))
}

/// Per-iteration callback: `(k, X_k, Y_k)`; `Y_k` is `None` for Newton.
pub type Observer<'a> = dyn FnMut(usize, &SpectralTensor, Option<&SpectralTensor>) + 'a;

#[derive(Clone, Debug)]
pub struct SpectralSolution {
    pub x: SpectralTensor,
    pub y: Option<SpectralTensor>,
    pub trace: ConvergenceTrace,
}

#[derive(Clone, Copy)]
enum Kind {
    Newton,
    Db,
}

fn singular_at(err: Error, iteration: usize, residuals: &[f64]) -> Error {
    match err {
        Error::SingularSlice { slice, .. } => Error::SingularSlice {
            slice,
            iteration: Some(iteration),
            trace: Some(Box::new(ConvergenceTrace::from_residuals(
                residuals.to_vec(),
                false,
            ))),
        },
        other => other,
    }
}

fn reached(r: f64, tol: f64) -> bool {
    r < tol || r == 0.0
}

fn run(
    kind: Kind,
    a: &SpectralTensor,
    cfg: &IterationConfig,
    observer: &mut Observer<'_>,
) -> Result<SpectralSolution> {
    cfg.validate()?;
    let project = cfg.hermitian_projection && tensor::spectrum_is_hermitian(a);
    let finish = |m: ComplexMatrix| if project { m.hermitian_part() } else { m };

    let (n, _, p) = a.dims();
    let mut x = a.clone();
    let mut y = match kind {
        Kind::Newton => None,
        Kind::Db => Some(SpectralTensor::identity(n, p)),
    };
    let mut residuals = vec![spectral_residual(a, &x)];
    observer(0, &x, y.as_ref());

    let mut converged = reached(residuals[0], cfg.tolerance);
    if !(cfg.early_stop && converged) {
        for k in 1..=cfg.max_iterations {
            match kind {
                Kind::Newton => {
                    x = x
                        .map_slices(|i, xi| {
                            let inv = cmat_inv(xi)?;
                            Ok(finish(xi.midpoint(&mul(a.slice(i), &inv))))
                        })
                        .map_err(|e| singular_at(e, k, &residuals))?;
                }
                Kind::Db => {
                    let yk = y.as_ref().expect("db carries Y");
                    let pairs: Vec<(ComplexMatrix, ComplexMatrix)> = x
                        .slices()
                        .par_iter()
                        .zip(yk.slices().par_iter())
                        .enumerate()
                        .map(|(i, (xi, yi))| {
                            let yinv = cmat_inv(yi).map_err(|e| e.at_slice(i))?;
                            let xinv = cmat_inv(xi).map_err(|e| e.at_slice(i))?;
                            Ok((finish(xi.midpoint(&yinv)), finish(yi.midpoint(&xinv))))
                        })
                        .collect::<Result<_>>()
                        .map_err(|e| singular_at(e, k, &residuals))?;
                    let (xs, ys): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
                    x = SpectralTensor::from_slices(xs)?;
                    y = Some(SpectralTensor::from_slices(ys)?);
                }
            }
            let r = spectral_residual(a, &x);
            residuals.push(r);
            observer(k, &x, y.as_ref());
            converged = reached(r, cfg.tolerance);
            if cfg.early_stop && converged {
                break;
            }
        }
    }
    Ok(SpectralSolution {
        x,
        y,
        trace: ConvergenceTrace::from_residuals(residuals, converged),
    })
}

pub fn newton_spectral(
    a: &SpectralTensor,
    cfg: &IterationConfig,
    observer: &mut Observer<'_>,
) -> Result<SpectralSolution> {
    run(Kind::Newton, a, cfg, observer)
}

pub fn db_spectral(
    a: &SpectralTensor,
    cfg: &IterationConfig,
    observer: &mut Observer<'_>,
) -> Result<SpectralSolution> {
    run(Kind::Db, a, cfg, observer)
}

fn checked_spectrum(a: &Tensor3) -> Result<SpectralTensor> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "T-square root needs square frontal slices, got {:?}",
            a.dims()
        )));
    }
    let ah = dft_mode3(a);
    if let Some(slice) = tensor::spectral_pd_violation(&ah, INPUT_PD_TOL) {
        return Err(Error::not_pd(Some(slice)));
    }
    Ok(ah)
}

pub fn newton_tsqrt_observed(
    a: &Tensor3,
    cfg: &IterationConfig,
    observer: &mut Observer<'_>,
) -> Result<SqrtSolution> {
    let ah = checked_spectrum(a)?;
    let sol = newton_spectral(&ah, cfg, observer)?;
    Ok(SqrtSolution {
        sqrt: idft_mode3(&sol.x)?,
        inv_sqrt: None,
        trace: sol.trace,
    })
}

pub fn db_tsqrt_observed(
    a: &Tensor3,
    cfg: &IterationConfig,
    observer: &mut Observer<'_>,
) -> Result<SqrtSolution> {
    let ah = checked_spectrum(a)?;
    let sol = db_spectral(&ah, cfg, observer)?;
    let y = sol.y.as_ref().expect("db carries Y");
    Ok(SqrtSolution {
        sqrt: idft_mode3(&sol.x)?,
        inv_sqrt: Some(idft_mode3(y)?),
        trace: sol.trace,
    })
}

pub fn newton_tsqrt(a: &Tensor3, cfg: &IterationConfig) -> Result<SqrtSolution> {
    newton_tsqrt_observed(a, cfg, &mut |_, _, _| {})
}

pub fn db_tsqrt(a: &Tensor3, cfg: &IterationConfig) -> Result<SqrtSolution> {
    db_tsqrt_observed(a, cfg, &mut |_, _, _| {})
}

/// Dispatches on `method`. The direct route reports a one-entry trace holding
/// the residual of its result.
pub fn t_sqrt(a: &Tensor3, method: SqrtMethod, cfg: &IterationConfig) -> Result<SqrtSolution> {
    match method {
        SqrtMethod::Newton => newton_tsqrt(a, cfg),
        SqrtMethod::Db => db_tsqrt(a, cfg),
        SqrtMethod::Direct => {
            let sqrt = tensor::t_sqrt_direct(a)?;
            let r = residual(a, &sqrt)?;
            Ok(SqrtSolution {
                sqrt,
                inv_sqrt: None,
                trace: ConvergenceTrace::from_residuals(vec![r], true),
            })
        }
    }
}

fn single(a: &ComplexMatrix) -> Result<SpectralTensor> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "square root needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    SpectralTensor::from_slices(vec![a.clone()])
}

/// Newton on a single matrix (a `p = 1` spectrum). No positive-definiteness
/// precondition is enforced here.
pub fn newton_sqrt_matrix(
    a: &ComplexMatrix,
    cfg: &IterationConfig,
) -> Result<(ComplexMatrix, ConvergenceTrace)> {
    let sol = newton_spectral(&single(a)?, cfg, &mut |_, _, _| {})?;
    Ok((sol.x.into_slices().remove(0), sol.trace))
}

/// Denman-Beavers on a single matrix: `(A^{1/2}, A^{-1/2}, trace)`.
pub fn db_sqrt_matrix(
    a: &ComplexMatrix,
    cfg: &IterationConfig,
) -> Result<(ComplexMatrix, ComplexMatrix, ConvergenceTrace)> {
    let sol = db_spectral(&single(a)?, cfg, &mut |_, _, _| {})?;
    let y = sol.y.expect("db carries Y").into_slices().remove(0);
    Ok((sol.x.into_slices().remove(0), y, sol.trace))
}

/// Real T-positive definite `n x n x p` tensor whose independent Fourier slices
/// are `Q diag(lambda) Q^H` with `lambda` log-spaced on `[1, kappa]`.
///
/// `Q` is Haar unitary (Gram-Schmidt on a complex Gaussian matrix); the DC slice
/// and, for even `p`, the Nyquist slice must be real, so they get a real
/// orthogonal `Q`. Remaining slices are conjugate mirrors.
pub fn make_conditioned_spd_tensor(n: usize, p: usize, kappa: f64, seed: u64) -> Result<Tensor3> {
    if n < 2 || p == 0 {
        return Err(Error::InvalidInput(format!(
            "conditioned tensor needs n >= 2 and p >= 1, got n = {n}, p = {p}"
        )));
    }
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidInput(format!("kappa must be >= 1, got {kappa}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda: Vec<f64> = (0..n)
        .map(|j| kappa.powf(j as f64 / (n - 1) as f64))
        .collect();
    let mut slices = vec![ComplexMatrix::zeros(n, n); p];
    for i in 0..=p / 2 {
        let real = i == 0 || 2 * i == p;
        let columns: Vec<Vec<C64>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = if real { 0.0 } else { StandardNormal.sample(&mut rng) };
                        C64::new(re, im)
                    })
                    .collect()
            })
            .collect();
        let q = orthonormal_columns(columns, n);
        let mut s = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for (k, l) in lambda.iter().enumerate() {
                    acc += q[k][r] * *l * q[k][c].conj();
                }
                s[(r, c)] = acc;
            }
        }
        slices[i] = s.hermitian_part();
    }
    for i in p / 2 + 1..p {
        slices[i] = slices[p - i].conj();
    }
    idft_mode3(&SpectralTensor::from_slices(slices)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodStability {
    /// `r_0 ..= r_K`; `+inf` from the iteration a slice went singular.
    pub residuals: Vec<f64>,
    pub r_min: f64,
    pub iterations_to_min: usize,
    pub r_final: f64,
    pub final_over_min: f64,
    /// `(r_final / r_min)^(1 / (K - k_min))`; `None` when the minimum is last.
    pub growth_per_iteration: Option<f64>,
    pub singular_at: Option<usize>,
}

impl MethodStability {
    fn from_outcome(outcome: Result<ConvergenceTrace>, iterations: usize) -> Result<Self> {
        let (mut residuals, singular_at) = match outcome {
            Ok(trace) => (trace.residuals, None),
            Err(Error::SingularSlice {
                iteration: Some(k),
                trace: Some(trace),
                ..
            }) => (trace.residuals, Some(k)),
            Err(e) => return Err(e),
        };
        residuals.resize(iterations + 1, f64::INFINITY);
        let (iterations_to_min, r_min) = residuals
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (k, r)| {
                if r < best.1 {
                    (k, r)
                } else {
                    best
                }
            });
        let r_final = *residuals.last().expect("non-empty");
        let final_over_min = if r_min > 0.0 {
            r_final / r_min
        } else if r_final == 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
        let steps = iterations - iterations_to_min.min(iterations);
        let growth_per_iteration =
            (steps > 0).then(|| final_over_min.powf(1.0 / steps as f64));
        Ok(Self {
            residuals,
            r_min,
            iterations_to_min,
            r_final,
            final_over_min,
            growth_per_iteration,
            singular_at,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub iterations: usize,
    pub newton: MethodStability,
    pub db: MethodStability,
}

impl StabilityReport {
    /// CSV `k,newton,db`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,newton,db\n");
        for k in 0..=self.iterations {
            let _ = writeln!(out, "{k},{},{}", self.newton.residuals[k], self.db.residuals[k]);
        }
        out
    }
}

/// Runs both solvers for exactly `iterations` updates with early stopping and
/// Hermitian projection disabled, so rounding drift is observed as is.
pub fn stability_experiment(a: &Tensor3, iterations: usize) -> Result<StabilityReport> {
    let ah = checked_spectrum(a)?;
    let cfg = IterationConfig {
        max_iterations: iterations.max(1),
        tolerance: 0.0,
        early_stop: false,
        hermitian_projection: false,
    };
    let newton = newton_spectral(&ah, &cfg, &mut |_, _, _| {}).map(|s| s.trace);
    let db = db_spectral(&ah, &cfg, &mut |_, _, _| {}).map(|s| s.trace);
    Ok(StabilityReport {
        iterations,
        newton: MethodStability::from_outcome(newton, iterations)?,
        db: MethodStability::from_outcome(db, iterations)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kappa: f64,
    pub measured_kappa: f64,
    pub report: StabilityReport,
}

/// One seeded conditioned tensor per `kappa`, each run through
/// [`stability_experiment`].
pub fn kappa_sweep(
    n: usize,
    p: usize,
    kappas: &[f64],
    iterations: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    kappas
        .iter()
        .map(|&kappa| {
            let a = make_conditioned_spd_tensor(n, p, kappa, seed)?;
            Ok(SweepRow {
                kappa,
                measured_kappa: tensor::max_slice_condition(&a)?,
                report: stability_experiment(&a, iterations)?,
            })
        })
        .collect()
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "kappa,measured_kappa,newton_iters_to_min,newton_growth,newton_r_min,newton_final_over_min,db_iters_to_min,db_r_min,db_final_over_min\n",
    );
    for row in rows {
        let (nw, db) = (&row.report.newton, &row.report.db);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.kappa,
            row.measured_kappa,
            nw.iterations_to_min,
            fmt_opt(nw.growth_per_iteration),
            nw.r_min,
            nw.final_over_min,
            db.iterations_to_min,
            db.r_min,
            db.final_over_min
        );
    }
    out
}

/// Relative Frobenius gap between two spectra, used to compare iterate
/// sequences.
pub fn spectral_relative_gap(a: &SpectralTensor, b: &SpectralTensor) -> f64 {
    let diff: f64 = a
        .slices()
        .iter()
        .zip(b.slices())
        .map(|(x, y)| x.sub(y).frobenius_norm_sq())
        .sum::<f64>()
        .sqrt();
    diff / b.frobenius_norm().max(f64::MIN_POSITIVE)
}
