//! Slow reference paths used to pin the FFT implementation in tests.
//!
//! These build the explicit block-circulant matrix and evaluate DFTs by direct
//! summation. Cost is cubic in `n*p`; keep them out of anything performance
//! sensitive.

use crate::fourier::{ComplexMatrix, C64};
use crate::tensor::Tensor3;

/// Row-major dense real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Plain triple loop; panics on non-conformable input.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "non-conformable");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut s = 0.0;
                for k in 0..self.cols {
                    s += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }
}

/// The `np x mp` block-circulant matrix whose first block column stacks the
/// frontal slices of `a`; block `(r, c)` is slice `(r - c) mod p`.
pub fn bcirc_oracle(a: &Tensor3) -> DenseMatrix {
    let (n, m, p) = a.dims();
    let mut out = DenseMatrix::zeros(n * p, m * p);
    for br in 0..p {
        for bc in 0..p {
            let k = (br + p - bc) % p;
            for i in 0..n {
                for j in 0..m {
                    out.set(br * n + i, bc * m + j, a.get(i, j, k));
                }
            }
        }
    }
    out
}

/// Stacks the frontal slices vertically into an `np x m` matrix.
pub fn unfold(a: &Tensor3) -> DenseMatrix {
    let (n, m, p) = a.dims();
    let mut out = DenseMatrix::zeros(n * p, m);
    for k in 0..p {
        for i in 0..n {
            for j in 0..m {
                out.set(k * n + i, j, a.get(i, j, k));
            }
        }
    }
    out
}

/// Inverse of [`unfold`].
pub fn fold(mat: &DenseMatrix, n: usize, m: usize, p: usize) -> Tensor3 {
    assert_eq!((mat.rows, mat.cols), (n * p, m), "shape does not fold");
    let mut out = Tensor3::zeros(n, m, p);
    for k in 0..p {
        for i in 0..n {
            for j in 0..m {
                out.set(i, j, k, mat.get(k * n + i, j));
            }
        }
    }
    out
}

/// T-product through the block-circulant matrix.
pub fn bcirc_product(a: &Tensor3, b: &Tensor3) -> Tensor3 {
    fold(&bcirc_oracle(a).matmul(&unfold(b)), a.n(), b.m(), a.p())
}

/// Unnormalized DFT of every tube by direct summation.
pub fn direct_dft(a: &Tensor3) -> Vec<ComplexMatrix> {
    let (n, m, p) = a.dims();
    (0..p)
        .map(|f| {
            let mut s = ComplexMatrix::zeros(n, m);
            for i in 0..n {
                for j in 0..m {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..p {
                        let angle = -2.0 * std::f64::consts::PI * (f * k) as f64 / p as f64;
                        acc += C64::from_polar(a.get(i, j, k), angle);
                    }
                    s[(i, j)] = acc;
                }
            }
            s
        })
        .collect()
}
