//! Color transfer by the Gaussian optimal transport (Monge) map, and the
//! per-channel moment-matching baseline.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::whiten::channel_stds;
use super::{
    center_channels, channel_covariance, channel_means, check_matrix_pd, covariance_roots,
    covariance_roots_matrix, tensor_covariance, CovarianceMode, ImageTensor,
};
use crate::error::{Error, Operand, Result};
use crate::tensor::{t_product, Tensor3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferMethod {
    Tensor,
    Channelwise,
}

impl std::str::FromStr for TransferMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tensor" => Ok(Self::Tensor),
            "channelwise" => Ok(Self::Channelwise),
            other => Err(Error::InvalidInput(format!("unknown transfer method {other:?}"))),
        }
    }
}

/// Unclipped result and its `[0, 1]`-clipped display version.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferResult {
    pub raw: ImageTensor,
    pub display: ImageTensor,
}

impl TransferResult {
    fn from_raw(raw: ImageTensor) -> Self {
        let display = raw.clipped();
        Self { raw, display }
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `T = Cs^{-1/2} (Cs^{1/2} Ct Cs^{1/2})^{1/2} Cs^{-1/2}` for `p x p` covariances.
pub fn transport_map(cs: &DMatrix<f64>, ct: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if cs.shape() != ct.shape() || !cs.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "covariances {:?} and {:?}",
            cs.shape(),
            ct.shape()
        )));
    }
    let (s_half, s_inv) = covariance_roots_matrix(cs, Some(Operand::Source))?;
    check_matrix_pd(ct, Some(Operand::Target))?;
    let middle = symmetrize(&s_half * ct * &s_half);
    let (m_half, _) = covariance_roots_matrix(&middle, Some(Operand::Target))?;
    Ok(symmetrize(&s_inv * m_half * &s_inv))
}

/// Tensor analogue of [`transport_map`] on `n x n x p` covariance tensors.
pub fn transport_map_tensor(cs: &Tensor3, ct: &Tensor3) -> Result<Tensor3> {
    if cs.dims() != ct.dims() {
        return Err(Error::DimensionMismatch(format!(
            "covariance tensors {:?} and {:?}",
            cs.dims(),
            ct.dims()
        )));
    }
    let (s_half, s_inv) = covariance_roots(cs, Some(Operand::Source))?;
    if crate::tensor::t_pd_violation(ct, super::SINGULAR_TOL)?.is_some() {
        return Err(Error::SingularCovariance {
            which: Some(Operand::Target),
        });
    }
    let middle = t_product(&t_product(&s_half, ct)?, &s_half)?;
    let (m_half, _) = covariance_roots(&middle, Some(Operand::Target))?;
    t_product(&t_product(&s_inv, &m_half)?, &s_inv)
}

pub fn color_transfer(source: &ImageTensor, target: &ImageTensor) -> Result<TransferResult> {
    color_transfer_with(source, target, CovarianceMode::Matrix)
}

pub fn color_transfer_with(
    source: &ImageTensor,
    target: &ImageTensor,
    mode: CovarianceMode,
) -> Result<TransferResult> {
    if source.channels() != target.channels() {
        return Err(Error::DimensionMismatch(format!(
            "source has {} channels, target {}",
            source.channels(),
            target.channels()
        )));
    }
    let (xs, _) = center_channels(source);
    let mu_t = channel_means(target);
    let mut out = match mode {
        CovarianceMode::Matrix => {
            let t = transport_map(&channel_covariance(source), &channel_covariance(target))?;
            ImageTensor::from_pixel_matrix(source.height(), source.width(), &(xs.pixel_matrix() * t))?
        }
        CovarianceMode::Tensor => {
            if source.height() != target.height() {
                return Err(Error::DimensionMismatch(format!(
                    "tensor-mode transfer needs equal heights, got {} and {}",
                    source.height(),
                    target.height()
                )));
            }
            let (xt, _) = center_channels(target);
            let t = transport_map_tensor(
                &tensor_covariance(xs.values())?,
                &tensor_covariance(xt.values())?,
            )?;
            ImageTensor::new(t_product(&t, xs.values())?)
        }
    }
    .into_values();
    for (k, mu) in mu_t.iter().enumerate() {
        out.frontal_mut(k).iter_mut().for_each(|x| *x += mu);
    }
    Ok(TransferResult::from_raw(ImageTensor::new(out)))
}

/// Per channel `(x - mu_s) * sigma_t / sigma_s + mu_t`, in RGB.
pub fn reinhard_channelwise_transfer(source: &ImageTensor, target: &ImageTensor) -> Result<ImageTensor> {
    if source.channels() != target.channels() {
        return Err(Error::DimensionMismatch(format!(
            "source has {} channels, target {}",
            source.channels(),
            target.channels()
        )));
    }
    let (ss, st) = (channel_stds(source)?, channel_stds(target)?);
    let (ms, mt) = (channel_means(source), channel_means(target));
    let mut out = source.values().clone();
    for k in 0..source.channels() {
        let gain = st[k] / ss[k];
        out.frontal_mut(k)
            .iter_mut()
            .for_each(|x| *x = (*x - ms[k]) * gain + mt[k]);
    }
    Ok(ImageTensor::new(out))
}
