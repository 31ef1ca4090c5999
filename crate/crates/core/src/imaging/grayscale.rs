//! Grayscale conversions: TDG plus the luminance and PCA baselines.

use nalgebra::DMatrix;

use super::{
    center_channels, channel_covariance, covariance_roots, covariance_roots_matrix, min_max,
    tensor_covariance, to_complex, CovarianceMode, ImageTensor,
};
use crate::error::{Error, Result};
use crate::fourier::cmat_herm_eig;
use crate::tensor::t_product;

pub const LUMINANCE_WEIGHTS: [f64; 3] = [0.2989, 0.5870, 0.1140];

/// Signed output plus its `[0, 1]` display version.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayscaleResult {
    pub raw: DMatrix<f64>,
    pub display: DMatrix<f64>,
}

impl GrayscaleResult {
    fn from_raw(raw: DMatrix<f64>) -> Self {
        let display = display_normalize(&raw);
        Self { raw, display }
    }
}

/// Affine min -> 0, max -> 1; a constant input maps to zeros.
pub fn display_normalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (lo, hi) = min_max(m.as_slice());
    let span = hi - lo;
    m.map(|x| if span > 0.0 { (x - lo) / span } else { 0.0 })
}

fn require_multichannel(img: &ImageTensor) -> Result<()> {
    if img.channels() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 channels, got {}",
            img.channels()
        )));
    }
    Ok(())
}

/// Centered pixel rows times `C^{-1/2}` (matrix-mode covariance).
pub fn tdg_decorrelate(img: &ImageTensor) -> Result<DMatrix<f64>> {
    require_multichannel(img)?;
    let (centered, _) = center_channels(img);
    let (_, inv) = covariance_roots_matrix(&channel_covariance(img), None)?;
    Ok(centered.pixel_matrix() * inv)
}

pub fn tdg_grayscale(img: &ImageTensor) -> Result<GrayscaleResult> {
    tdg_grayscale_with(img, CovarianceMode::Matrix)
}

pub fn tdg_grayscale_with(img: &ImageTensor, mode: CovarianceMode) -> Result<GrayscaleResult> {
    require_multichannel(img)?;
    let (n, m, p) = img.dims();
    let raw = match mode {
        CovarianceMode::Matrix => {
            let x = tdg_decorrelate(img)?;
            DMatrix::from_fn(n, m, |i, j| x.row(i * m + j).sum() / p as f64)
        }
        CovarianceMode::Tensor => {
            let (centered, _) = center_channels(img);
            let c = tensor_covariance(centered.values())?;
            let (_, inv) = covariance_roots(&c, None)?;
            let w = t_product(&inv, centered.values())?;
            DMatrix::from_fn(n, m, |i, j| (0..p).map(|k| w.get(i, j, k)).sum::<f64>() / p as f64)
        }
    };
    Ok(GrayscaleResult::from_raw(raw))
}

pub fn luminance_grayscale(img: &ImageTensor) -> Result<DMatrix<f64>> {
    if img.channels() != 3 {
        return Err(Error::WrongChannelCount {
            expected: 3,
            found: img.channels(),
        });
    }
    let (n, m, _) = img.dims();
    Ok(DMatrix::from_fn(n, m, |i, j| {
        let r = i * m + j;
        (0..3).map(|k| LUMINANCE_WEIGHTS[k] * img.channel(k)[r]).sum()
    }))
}

/// Leading eigenvector of the channel covariance, sign fixed so the entry of
/// largest magnitude is positive.
pub fn pca_weights(img: &ImageTensor) -> Result<Vec<f64>> {
    require_multichannel(img)?;
    let eig = cmat_herm_eig(&to_complex(&channel_covariance(img)))?;
    if !(eig.values[0] > 0.0) {
        return Err(Error::SingularCovariance { which: None });
    }
    let p = img.channels();
    let mut w: Vec<f64> = (0..p).map(|k| eig.vectors[(k, 0)].re).collect();
    // Ties are broken toward the lower channel index.
    let lead = (0..p).fold(0, |best, k| if w[k].abs() > w[best].abs() { k } else { best });
    if w[lead] < 0.0 {
        w.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(w)
}

pub fn pca_grayscale(img: &ImageTensor) -> Result<GrayscaleResult> {
    let w = pca_weights(img)?;
    let (centered, _) = center_channels(img);
    let (n, m, _) = img.dims();
    let raw = DMatrix::from_fn(n, m, |i, j| {
        let r = i * m + j;
        w.iter().enumerate().map(|(k, wk)| wk * centered.channel(k)[r]).sum()
    });
    Ok(GrayscaleResult::from_raw(raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::testutil;
    use crate::reference;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn luminance_weights() {
        let red = ImageTensor::from_channels(2, 2, &[vec![1.0; 4], vec![0.0; 4], vec![0.0; 4]]).unwrap();
        assert!(luminance_grayscale(&red).unwrap().iter().all(|&g| g == 0.2989));
        let white = ImageTensor::from_channels(2, 2, &[vec![1.0; 4], vec![1.0; 4], vec![1.0; 4]]).unwrap();
        assert!(luminance_grayscale(&white)
            .unwrap()
            .iter()
            .all(|&g| (g - 0.9999).abs() < 1e-12));
        let two = ImageTensor::from_channels(1, 1, &[vec![1.0], vec![1.0]]).unwrap();
        assert!(matches!(
            luminance_grayscale(&two),
            Err(Error::WrongChannelCount { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn luminance_matches_pixel_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let chans: Vec<Vec<f64>> = (0..3).map(|_| (0..12).map(|_| rng.random()).collect()).collect();
        let img = ImageTensor::from_channels(3, 4, &chans).unwrap();
        let g = luminance_grayscale(&img).unwrap();
        for i in 0..3 {
            for j in 0..4 {
                let px = i * 4 + j;
                let want = 0.2989 * chans[0][px] + 0.5870 * chans[1][px] + 0.1140 * chans[2][px];
                assert!((g[(i, j)] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn tdg_on_white_covariance_is_plain_average() {
        // Channels +-1 patterns that are orthogonal with unit variance.
        let a = vec![1.0, -1.0, 1.0, -1.0];
        let b = vec![1.0, 1.0, -1.0, -1.0];
        let c = vec![1.0, -1.0, -1.0, 1.0];
        let img = ImageTensor::from_channels(2, 2, &[a.clone(), b.clone(), c.clone()]).unwrap();
        let g = tdg_grayscale(&img).unwrap();
        for px in 0..4 {
            let want = (a[px] + b[px] + c[px]) / 3.0;
            assert!((g.raw[(px / 2, px % 2)] - want).abs() < 1e-12);
        }
        let (lo, hi) = min_max(g.display.as_slice());
        assert_eq!((lo, hi), (0.0, 1.0));
    }

    #[test]
    fn worked_example_covariance_is_singular() {
        // The printed image has a rank-2 covariance, so the decorrelation step
        // must refuse it rather than return garbage.
        let img = reference::grayscale_example().image();
        assert!(matches!(
            tdg_grayscale(&img),
            Err(Error::SingularCovariance { .. })
        ));
    }

    #[test]
    fn decorrelation_with_printed_covariance() {
        // Inverse square root of the printed covariance (eigenvalues
        // (11 +- sqrt 73)/8 and 1) applied to the first centered pixel; the
        // expected values come from an independent dense eigensolver.
        let g = reference::grayscale_example();
        let inv = super::super::real_part(&crate::fourier::cmat_inv_sqrt_direct(&g.covariance_matrix()).unwrap());
        let x = DMatrix::from_row_slice(1, 3, &g.pixel_matrix[0]);
        let y = x * inv;
        for (a, b) in y.iter().zip([-1.117_586_16, -0.040_524_98, -1.040_524_98]) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn both_modes_produce_grayscale() {
        // The two modes whiten different operands, so only shape and finiteness
        // are shared.
        let img = testutil::correlated_image(4, 16, &testutil::RGB_CORR, 9);
        let t = tdg_grayscale_with(&img, CovarianceMode::Tensor).unwrap();
        let m = tdg_grayscale_with(&img, CovarianceMode::Matrix).unwrap();
        assert_eq!(t.raw.shape(), (4, 16));
        assert_eq!(m.raw.shape(), (4, 16));
        assert!(t.raw.iter().chain(m.raw.iter()).all(|x| x.is_finite()));
    }

    #[test]
    fn pca_recovers_gray_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t: Vec<f64> = (0..16).map(|_| rng.random()).collect();
        let img = ImageTensor::from_channels(4, 4, &[t.clone(), t.clone(), t]).unwrap();
        let w = pca_weights(&img).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!(w.iter().all(|x| (x - s).abs() < 1e-10), "{w:?}");
        let a = pca_grayscale(&img).unwrap();
        let b = pca_grayscale(&img).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pca_on_worked_example_uses_top_eigenvector() {
        let img = reference::grayscale_example().image();
        let w = pca_weights(&img).unwrap();
        let c = channel_covariance(&img);
        let wv = nalgebra::DVector::from_vec(w.clone());
        let cw = &c * &wv;
        let top = c.symmetric_eigen().eigenvalues.max();
        assert!((cw - wv * top).norm() < 1e-10);
        let lead = w.iter().fold(0.0f64, |a, &b| if b.abs() > a.abs() { b } else { a });
        assert!(lead > 0.0);
    }

    #[test]
    fn needs_two_channels() {
        let img = ImageTensor::from_channels(1, 2, &[vec![0.1, 0.2]]).unwrap();
        assert!(matches!(tdg_grayscale(&img), Err(Error::InvalidInput(_))));
        assert!(matches!(pca_grayscale(&img), Err(Error::InvalidInput(_))));
    }
}
