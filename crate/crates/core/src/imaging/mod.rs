//! Image applications of the T-square root: decorrelated grayscale, whitening
//! and covariance-matching color transfer, plus the classical baselines and
//! quality metrics used to compare them.
//!
//! An image is an `n x m x p` tensor with one frontal slice per channel.
//! Covariances come in two flavours (see [`CovarianceMode`]):
//!
//! * `Matrix`: the `p x p` channel covariance with pixels as samples.
//! * `Tensor`: `(1/m) X * X^T`, an `n x n x p` tensor.

pub mod grayscale;
pub mod io;
pub mod metrics;
pub mod transfer;
pub mod whiten;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Operand, Result};
use crate::fourier::{cmat_herm_eig, ComplexMatrix};
use crate::solver::{db_tsqrt, IterationConfig};
use crate::tensor::{self, t_product, t_transpose, Tensor3};

pub use grayscale::{luminance_grayscale, pca_grayscale, tdg_grayscale, GrayscaleResult};
pub use metrics::{decorrelation_index, eme, pearson_channel_correlations, ssim, QualityMetrics};
pub use transfer::{color_transfer, reinhard_channelwise_transfer};
pub use whiten::{channelwise_pca_whiten, matrix_whiten, t_whiten};

/// Channels whose mean exceeds this (relative to the largest entry) count as
/// not centered.
pub const CENTERED_TOL: f64 = 1e-10;
/// Relative eigenvalue floor below which a covariance is singular.
pub const SINGULAR_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceMode {
    #[default]
    Matrix,
    Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageTensor {
    values: Tensor3,
    channel_means: Option<Vec<f64>>,
}

impl ImageTensor {
    pub fn new(values: Tensor3) -> Self {
        Self {
            values,
            channel_means: None,
        }
    }

    /// One row-major `height x width` buffer per channel.
    pub fn from_channels(height: usize, width: usize, channels: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels.len());
        for (k, c) in channels.iter().enumerate() {
            if c.len() != height * width {
                return Err(Error::DimensionMismatch(format!(
                    "channel {k} has {} values, expected {}",
                    c.len(),
                    height * width
                )));
            }
            data.extend_from_slice(c);
        }
        Ok(Self::new(Tensor3::new(height, width, channels.len(), data)?))
    }

    pub fn with_channel_means(mut self, means: Vec<f64>) -> Result<Self> {
        if means.len() != self.channels() {
            return Err(Error::DimensionMismatch(format!(
                "{} channel means for {} channels",
                means.len(),
                self.channels()
            )));
        }
        self.channel_means = Some(means);
        Ok(self)
    }

    pub fn height(&self) -> usize {
        self.values.n()
    }

    pub fn width(&self) -> usize {
        self.values.m()
    }

    pub fn channels(&self) -> usize {
        self.values.p()
    }

    pub fn pixel_count(&self) -> usize {
        self.height() * self.width()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.values.dims()
    }

    pub fn values(&self) -> &Tensor3 {
        &self.values
    }

    pub fn into_values(self) -> Tensor3 {
        self.values
    }

    pub fn channel(&self, k: usize) -> &[f64] {
        self.values.frontal(k)
    }

    pub fn channel_means(&self) -> Option<&[f64]> {
        self.channel_means.as_deref()
    }

    /// Clamps every value to `[0, 1]`.
    pub fn clipped(&self) -> Self {
        Self {
            values: self.values.map(|x| x.clamp(0.0, 1.0)),
            channel_means: self.channel_means.clone(),
        }
    }

    /// Affine map of the global min to 0 and max to 1 (all zeros if constant).
    pub fn display_normalized(&self) -> Self {
        let (lo, hi) = min_max(self.values.data());
        let span = hi - lo;
        Self {
            values: self
                .values
                .map(|x| if span > 0.0 { (x - lo) / span } else { 0.0 }),
            channel_means: self.channel_means.clone(),
        }
    }

    /// `N x p` matrix with one row per pixel (row-major pixel order).
    pub fn pixel_matrix(&self) -> DMatrix<f64> {
        let (n, m, p) = self.dims();
        DMatrix::from_fn(n * m, p, |r, k| self.channel(k)[r])
    }

    /// Inverse of [`pixel_matrix`](Self::pixel_matrix).
    pub fn from_pixel_matrix(height: usize, width: usize, x: &DMatrix<f64>) -> Result<Self> {
        if x.nrows() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} pixel rows for a {height}x{width} image",
                x.nrows()
            )));
        }
        let channels: Vec<Vec<f64>> = (0..x.ncols())
            .map(|k| x.column(k).iter().copied().collect())
            .collect();
        Self::from_channels(height, width, &channels)
    }
}

pub(crate) fn min_max(data: &[f64]) -> (f64, f64) {
    data.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

pub fn channel_means(img: &ImageTensor) -> Vec<f64> {
    (0..img.channels())
        .map(|k| img.channel(k).iter().sum::<f64>() / img.pixel_count() as f64)
        .collect()
}

/// Subtracts each channel's mean; the means are also stored on the result.
pub fn center_channels(img: &ImageTensor) -> (ImageTensor, Vec<f64>) {
    let means = channel_means(img);
    let mut values = img.values.clone();
    for (k, mu) in means.iter().enumerate() {
        for x in values.frontal_mut(k) {
            *x -= mu;
        }
    }
    let centered = ImageTensor {
        values,
        channel_means: Some(means.clone()),
    };
    (centered, means)
}

/// `(1/N) X^T X` over mean-centered pixel rows.
pub fn channel_covariance(img: &ImageTensor) -> DMatrix<f64> {
    let (centered, _) = center_channels(img);
    let x = centered.pixel_matrix();
    (x.transpose() * &x) / img.pixel_count() as f64
}

fn check_centered(x: &Tensor3) -> Result<()> {
    let scale = x.max_abs().max(1.0);
    let plane = (x.n() * x.m()) as f64;
    let max_mean = (0..x.p())
        .map(|k| (x.frontal(k).iter().sum::<f64>() / plane).abs())
        .fold(0.0, f64::max);
    if max_mean > CENTERED_TOL * scale {
        return Err(Error::NotCentered { max_mean });
    }
    Ok(())
}

/// `(1/m) X * X^T` for a tensor whose frontal slices each have zero mean.
pub fn tensor_covariance(x: &Tensor3) -> Result<Tensor3> {
    check_centered(x)?;
    Ok(t_product(x, &t_transpose(x))?.scale(1.0 / x.m() as f64))
}

pub(crate) fn to_complex(m: &DMatrix<f64>) -> ComplexMatrix {
    let row_major: Vec<f64> = m.transpose().as_slice().to_vec();
    ComplexMatrix::from_real(m.nrows(), m.ncols(), &row_major).expect("shape matches")
}

pub(crate) fn real_part(m: &ComplexMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].re)
}

fn solver_config() -> IterationConfig {
    IterationConfig {
        max_iterations: 100,
        tolerance: 1e-13,
        ..IterationConfig::default()
    }
}

/// `(C^{1/2}, C^{-1/2})` of a covariance tensor by Denman-Beavers, after
/// rescaling to unit spectral size so the absolute stopping rule is meaningful.
pub(crate) fn covariance_roots(c: &Tensor3, which: Option<Operand>) -> Result<(Tensor3, Tensor3)> {
    let singular = || Error::SingularCovariance { which };
    if tensor::t_pd_violation(c, SINGULAR_TOL)?.is_some() {
        return Err(singular());
    }
    let scale = crate::fourier::dft_mode3(c)
        .slices()
        .iter()
        .map(ComplexMatrix::max_abs)
        .fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(singular());
    }
    let sol = db_tsqrt(&c.scale(1.0 / scale), &solver_config()).map_err(|e| match e {
        Error::SingularSlice { .. } | Error::NotPositiveDefinite { .. } => singular(),
        other => other,
    })?;
    let root = scale.sqrt();
    let inv = sol.inv_sqrt.expect("db returns Y");
    Ok((sol.sqrt.scale(root), inv.scale(1.0 / root)))
}

/// Matrix-mode roots: the `p x p` covariance is run through the T-solver as a
/// `p x p x 1` tensor.
pub(crate) fn covariance_roots_matrix(
    c: &DMatrix<f64>,
    which: Option<Operand>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_matrix_pd(c, which)?;
    let p = c.nrows();
    let t = Tensor3::new(p, p, 1, c.transpose().as_slice().to_vec())?;
    let (s, inv) = covariance_roots(&t, which)?;
    let as_matrix = |t: &Tensor3| DMatrix::from_row_slice(p, p, t.data());
    Ok((as_matrix(&s), as_matrix(&inv)))
}

pub(crate) fn check_matrix_pd(c: &DMatrix<f64>, which: Option<Operand>) -> Result<()> {
    let eig = cmat_herm_eig(&to_complex(c))?;
    let max = eig.values[0];
    let min = *eig.values.last().expect("non-empty");
    if !(max > 0.0) || !(min > SINGULAR_TOL * max) {
        return Err(Error::SingularCovariance { which });
    }
    Ok(())
}
