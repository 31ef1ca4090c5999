//! Tensor file format: a JSON object `{"dims": [n, m, p], "data": [...]}` with
//! `data` in slice-major, row-major order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::tensor::Tensor3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorFile {
    pub dims: [usize; 3],
    pub data: Vec<f64>,
}

impl From<&Tensor3> for TensorFile {
    fn from(t: &Tensor3) -> Self {
        let (n, m, p) = t.dims();
        Self {
            dims: [n, m, p],
            data: t.data().to_vec(),
        }
    }
}

impl TryFrom<TensorFile> for Tensor3 {
    type Error = crate::error::Error;

    fn try_from(f: TensorFile) -> Result<Self> {
        let [n, m, p] = f.dims;
        Tensor3::new(n, m, p, f.data)
    }
}

pub fn tensor_to_json(t: &Tensor3) -> String {
    serde_json::to_string(&TensorFile::from(t)).expect("plain data serializes")
}

pub fn tensor_from_json(text: &str) -> Result<Tensor3> {
    let file: TensorFile = serde_json::from_str(text)?;
    file.try_into()
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor3> {
    tensor_from_json(&std::fs::read_to_string(path)?)
}
