//! Image quality metrics: SSIM, EME, decorrelation index and channel
//! correlations.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::whiten::channel_stds;
use super::{channel_covariance, ImageTensor};
use crate::error::{Error, Result};

pub const SSIM_WINDOW: usize = 8;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;
pub const EME_EPS: f64 = 1e-4;
pub const EME_BLOCK: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityMetrics {
    pub ssim: f64,
    pub eme: f64,
    pub di: f64,
    /// `None` when some channel is constant.
    #[serde(rename = "correlations")]
    pub channel_correlations: Option<Vec<Vec<f64>>>,
}

/// Mean SSIM over all `w x w` windows at stride 1, where `w` is 8 or the
/// image side if smaller. Local statistics use population variance.
pub fn ssim(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "ssim on {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (n, m) = a.shape();
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("ssim on an empty image".into()));
    }
    let (wr, wc) = (SSIM_WINDOW.min(n), SSIM_WINDOW.min(m));
    let count = (wr * wc) as f64;
    let rows: Vec<f64> = (0..=n - wr)
        .into_par_iter()
        .map(|r0| {
            let mut acc = 0.0;
            for c0 in 0..=m - wc {
                let (va, vb) = (a.view((r0, c0), (wr, wc)), b.view((r0, c0), (wr, wc)));
                let (ma, mb) = (va.sum() / count, vb.sum() / count);
                let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
                for (x, y) in va.iter().zip(vb.iter()) {
                    let (dx, dy) = (x - ma, y - mb);
                    saa += dx * dx;
                    sbb += dy * dy;
                    sab += dx * dy;
                }
                let (saa, sbb, sab) = (saa / count, sbb / count, sab / count);
                acc += ((2.0 * ma * mb + SSIM_C1) * (2.0 * sab + SSIM_C2))
                    / ((ma * ma + mb * mb + SSIM_C1) * (saa + sbb + SSIM_C2));
            }
            acc
        })
        .collect();
    let windows = ((n - wr + 1) * (m - wc + 1)) as f64;
    Ok(rows.iter().sum::<f64>() / windows)
}

/// Mean over `block x block` tiles (edge tiles may be smaller) of
/// `20 log10((max + eps) / (min + eps))`.
pub fn eme(img: &DMatrix<f64>, block: usize) -> f64 {
    let (n, m) = img.shape();
    let block = block.max(1);
    if n == 0 || m == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut tiles = 0usize;
    for r0 in (0..n).step_by(block) {
        for c0 in (0..m).step_by(block) {
            let tile = img.view((r0, c0), (block.min(n - r0), block.min(m - c0)));
            let (lo, hi) = (tile.min(), tile.max());
            total += 20.0 * ((hi + EME_EPS) / (lo + EME_EPS)).log10();
            tiles += 1;
        }
    }
    total / tiles as f64
}

/// `||Cov - I||_F` of the channel covariance of the image as given.
pub fn decorrelation_index(img: &ImageTensor) -> f64 {
    let c = channel_covariance(img);
    (c - DMatrix::identity(img.channels(), img.channels())).norm()
}

pub fn pearson_channel_correlations(img: &ImageTensor) -> Result<DMatrix<f64>> {
    let stds = channel_stds(img)?;
    let c = channel_covariance(img);
    let p = img.channels();
    Ok(DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else {
            c[(i, j)] / (stds[i] * stds[j])
        }
    }))
}

pub fn correlations_as_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
