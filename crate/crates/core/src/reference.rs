//! Worked-example inputs and published result tables, embedded from `data/`.
//!
//! Everything here is a fixed constant; parsing failures are bugs.

use serde::Deserialize;

use crate::fourier::ComplexMatrix;
use crate::imaging::ImageTensor;
use crate::io::tensor_from_json;
use crate::tensor::Tensor3;

fn tensor(text: &str) -> Tensor3 {
    tensor_from_json(text).expect("embedded tensor is valid")
}

/// Example tensor with slices `[[3,1,0],[1,4,1],[0,1,3]]`, a tridiagonal
/// `(0.5, 2, 0.5)` slice and `I`.
pub fn example1_tensor() -> Tensor3 {
    tensor(include_str!("../data/example1.json"))
}

/// Its square root as printed to five decimals.
pub fn example1_sqrt_printed() -> Tensor3 {
    tensor(include_str!("../data/example1_sqrt.json"))
}

/// Ill-conditioned example used in the stability study (slice condition
/// numbers about 471 and 1100).
pub fn example3_tensor() -> Tensor3 {
    tensor(include_str!("../data/example3.json"))
}

/// The two tensors of the TBW worked example.
pub fn tbw_pair() -> (Tensor3, Tensor3) {
    (
        tensor(include_str!("../data/tbw_a.json")),
        tensor(include_str!("../data/tbw_b.json")),
    )
}

#[derive(Clone, Debug, Deserialize)]
pub struct ResidualTable {
    pub residuals: Vec<f64>,
    pub rho: Vec<Option<f64>>,
    pub q: Vec<Option<f64>>,
}

fn table(text: &str) -> ResidualTable {
    serde_json::from_str(text).expect("embedded table is valid")
}

pub fn newton_table() -> ResidualTable {
    table(include_str!("../data/newton_table.json"))
}

pub fn db_table() -> ResidualTable {
    table(include_str!("../data/db_table.json"))
}

/// Denman-Beavers on the printed grayscale covariance matrix.
pub fn image_cov_table() -> ResidualTable {
    table(include_str!("../data/image_cov_table.json"))
}

#[derive(Clone, Debug, Deserialize)]
pub struct StabilityTable {
    pub k: Vec<usize>,
    pub newton: Vec<f64>,
    pub db: Vec<f64>,
}

pub fn stability_table() -> StabilityTable {
    serde_json::from_str(include_str!("../data/stability_table.json")).expect("valid")
}

#[derive(Clone, Debug, Deserialize)]
pub struct KappaRow {
    pub kappa: f64,
    pub iters: usize,
    pub growth: f64,
    pub newton_r_min: f64,
    pub newton_ratio: f64,
    pub db_r_min: f64,
    pub db_ratio: f64,
}

#[derive(Deserialize)]
struct KappaRows {
    rows: Vec<KappaRow>,
}

pub fn kappa_sweep_table() -> Vec<KappaRow> {
    serde_json::from_str::<KappaRows>(include_str!("../data/kappa_sweep.json"))
        .expect("valid")
        .rows
}

#[derive(Clone, Debug, Deserialize)]
pub struct TbwTable {
    /// `(tr A_i, tr B_i, tr M_i^{1/2}, d_i^2)` per slice.
    pub rows: Vec<[f64; 4]>,
    pub slice_distances: Vec<f64>,
    pub total: f64,
}

pub fn tbw_table() -> TbwTable {
    serde_json::from_str(include_str!("../data/tbw_table.json")).expect("valid")
}

#[derive(Clone, Debug, Deserialize)]
pub struct GrayscaleExample {
    image: crate::io::TensorFile,
    pub channel_means: Vec<f64>,
    pub pixel_matrix: Vec<Vec<f64>>,
    pub covariance: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub inv_sqrt: Vec<Vec<f64>>,
    pub first_pixel_decorrelated: Vec<f64>,
    pub x_decor: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
}

impl GrayscaleExample {
    /// The 2x2 RGB image (values 1..4, not normalized).
    pub fn image(&self) -> ImageTensor {
        let t: Tensor3 = self.image.clone().try_into().expect("valid");
        ImageTensor::new(t)
    }

    pub fn covariance_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&self.covariance)
    }

    pub fn inv_sqrt_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&self.inv_sqrt)
    }
}

/// Inputs and printed intermediates of the grayscale worked example.
pub fn grayscale_example() -> GrayscaleExample {
    serde_json::from_str(include_str!("../data/grayscale.json")).expect("valid")
}
