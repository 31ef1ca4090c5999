//! Whitening: the T-product path and the matrix / per-channel baselines.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    center_channels, channel_covariance, check_matrix_pd, covariance_roots,
    covariance_roots_matrix, real_part, tensor_covariance, to_complex, CovarianceMode,
    ImageTensor,
};
use crate::error::{Error, Result};
use crate::fourier::cmat_inv_sqrt_direct;
use crate::tensor::{t_product, Tensor3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WhitenMethod {
    T,
    Matrix,
    Channelwise,
}

impl std::str::FromStr for WhitenMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t" => Ok(Self::T),
            "matrix" => Ok(Self::Matrix),
            "channelwise" => Ok(Self::Channelwise),
            other => Err(Error::InvalidInput(format!("unknown whitening method {other:?}"))),
        }
    }
}

/// `C^{-1/2} * x` with `C = (1/m) x * x^T`; `x` must already be centered.
pub fn t_whiten(x: &Tensor3) -> Result<Tensor3> {
    let c = tensor_covariance(x)?;
    let (_, inv) = covariance_roots(&c, None)?;
    t_product(&inv, x)
}

/// Whitens an image through the T-square-root solver. Output channels are
/// centered; the removed means are kept on the result.
pub fn t_whiten_image(img: &ImageTensor, mode: CovarianceMode) -> Result<ImageTensor> {
    let (centered, means) = center_channels(img);
    let out = match mode {
        CovarianceMode::Matrix => {
            let (_, inv) = covariance_roots_matrix(&channel_covariance(img), None)?;
            ImageTensor::from_pixel_matrix(img.height(), img.width(), &(centered.pixel_matrix() * inv))?
        }
        CovarianceMode::Tensor => ImageTensor::new(t_whiten(centered.values())?),
    };
    out.with_channel_means(means)
}

/// Classical ZCA on pixel rows, `X C^{-1/2}` by eigendecomposition.
pub fn matrix_whiten(img: &ImageTensor) -> Result<ImageTensor> {
    let c = channel_covariance(img);
    check_matrix_pd(&c, None)?;
    let inv = real_part(&cmat_inv_sqrt_direct(&to_complex(&c))?);
    let (centered, means) = center_channels(img);
    ImageTensor::from_pixel_matrix(img.height(), img.width(), &(centered.pixel_matrix() * inv))?
        .with_channel_means(means)
}

pub(crate) fn channel_stds(img: &ImageTensor) -> Result<Vec<f64>> {
    let c = channel_covariance(img);
    (0..img.channels())
        .map(|k| {
            let v = c[(k, k)];
            if v > 0.0 {
                Ok(v.sqrt())
            } else {
                Err(Error::ZeroVarianceChannel { channel: k })
            }
        })
        .collect()
}

/// Per-channel standardization with no cross-channel rotation.
pub fn channelwise_pca_whiten(img: &ImageTensor) -> Result<ImageTensor> {
    let stds = channel_stds(img)?;
    let (centered, means) = center_channels(img);
    let mut x = centered.pixel_matrix();
    for (k, s) in stds.iter().enumerate() {
        x.column_mut(k).scale_mut(1.0 / s);
    }
    ImageTensor::from_pixel_matrix(img.height(), img.width(), &x)?.with_channel_means(means)
}

pub fn whiten_image(img: &ImageTensor, method: WhitenMethod) -> Result<ImageTensor> {
    match method {
        WhitenMethod::T => t_whiten_image(img, CovarianceMode::Matrix),
        WhitenMethod::Matrix => matrix_whiten(img),
        WhitenMethod::Channelwise => channelwise_pca_whiten(img),
    }
}

/// Dense ZCA of a single `n x m` slice, used as an oracle for `p = 1`.
pub fn zca_matrix(x: &DMatrix<f64>) -> DMatrix<f64> {
    let c = x * x.transpose() / x.ncols() as f64;
    let e = c.symmetric_eigen();
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|l| 1.0 / l.sqrt()));
    &e.eigenvectors * d * e.eigenvectors.transpose() * x
}
