//! T-product algebra for real third-order tensors, principal T-square roots
//! (Newton and Denman-Beavers), the tensor Bures-Wasserstein distance, and
//! image applications built on them.
//!
//! Every tensor operation runs in the Fourier domain: a DFT along the third mode
//! turns the T-product into `p` independent complex matrix products, so most of
//! the numerics live in [`fourier`].

pub mod error;
pub mod fourier;
pub mod imaging;
pub mod io;
pub mod oracle;
#[cfg(test)]
mod properties;
pub mod reference;
pub mod solver;
pub mod tbw;
pub mod tensor;

pub use error::{Error, Operand, Result};
pub use fourier::{ComplexMatrix, SpectralTensor, C64};
pub use solver::{ConvergenceTrace, IterationConfig, SqrtMethod, SqrtSolution};
pub use tensor::Tensor3;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
