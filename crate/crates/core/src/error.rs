use std::fmt;

use crate::solver::ConvergenceTrace;

/// Which operand of a binary operation failed a precondition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operand {
    A,
    B,
    Source,
    Target,
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Operand::A => "a",
            Operand::B => "b",
            Operand::Source => "source",
            Operand::Target => "target",
        };
        f.write_str(name)
    }
}

fn slice_suffix(slice: &Option<usize>) -> String {
    slice.map(|s| format!(" at Fourier slice {s}")).unwrap_or_default()
}

fn operand_prefix(which: &Option<Operand>) -> String {
    which.map(|w| format!("{w}: ")).unwrap_or_default()
}

fn iteration_suffix(iteration: &Option<usize>) -> String {
    iteration.map(|k| format!(" (iteration {k})")).unwrap_or_default()
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("inverse DFT left an imaginary residue of {max_imag:e} (threshold {threshold:e}); the spectrum is not conjugate-symmetric")]
    ResidualImaginaryTooLarge { max_imag: f64, threshold: f64 },

    #[error("singular matrix{}{}", slice_suffix(.slice), iteration_suffix(.iteration))]
    SingularSlice {
        slice: Option<usize>,
        iteration: Option<usize>,
        /// Trace accumulated up to the failing iteration, when raised by a solver.
        trace: Option<Box<ConvergenceTrace>>,
    },

    #[error("matrix is not Hermitian (max |a - a^H| = {max_asymmetry:e})")]
    NotHermitian { max_asymmetry: f64 },

    #[error("{}not T-positive definite: some Fourier slice fails the positive-definiteness test{}", operand_prefix(.which), slice_suffix(.slice))]
    NotPositiveDefinite {
        which: Option<Operand>,
        slice: Option<usize>,
    },

    #[error("input is not centered (largest channel mean {max_mean:e})")]
    NotCentered { max_mean: f64 },

    #[error("{}covariance is singular or not positive definite", operand_prefix(.which))]
    SingularCovariance { which: Option<Operand> },

    #[error("expected {expected} channels, found {found}")]
    WrongChannelCount { expected: usize, found: usize },

    #[error("channel {channel} has zero variance")]
    ZeroVarianceChannel { channel: usize },

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn singular(slice: Option<usize>) -> Self {
        Error::SingularSlice {
            slice,
            iteration: None,
            trace: None,
        }
    }

    pub(crate) fn not_pd(slice: Option<usize>) -> Self {
        Error::NotPositiveDefinite { which: None, slice }
    }

    /// Attach a Fourier slice index to slice-level kernel errors.
    pub(crate) fn at_slice(self, index: usize) -> Self {
        match self {
            Error::SingularSlice {
                slice: None,
                iteration,
                trace,
            } => Error::SingularSlice {
                slice: Some(index),
                iteration,
                trace,
            },
            Error::NotPositiveDefinite { which, slice: None } => Error::NotPositiveDefinite {
                which,
                slice: Some(index),
            },
            Error::NotHermitian { .. } => Error::NotPositiveDefinite {
                which: None,
                slice: Some(index),
            },
            other => other,
        }
    }

    pub(crate) fn with_operand(self, operand: Operand) -> Self {
        match self {
            Error::NotPositiveDefinite { slice, .. } => Error::NotPositiveDefinite {
                which: Some(operand),
                slice,
            },
            Error::SingularCovariance { .. } => Error::SingularCovariance {
                which: Some(operand),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
