//! Minimal dense-tensor reverse-mode automatic differentiation.
//!
//! The crate provides exactly what a small pairwise ranking model needs:
//! row-major [`Tensor`]s over `f32` or `f64`, a define-by-run [`Tape`]
//! with matmul / conv1d / pooling / recurrent-cell building blocks,
//! bias-corrected Adam with Polyak-averaged shadow weights, Glorot
//! initialization, and a plain-text-headed tensor [`bundle`] format for
//! checkpoints.
//!
//! Training runs in `f32`; gradient verification against central finite
//! differences runs in `f64` (see [`gradcheck`]).

pub mod bundle;
pub mod gradcheck;
pub mod init;
pub mod optim;
pub mod rnn;
pub mod scalar;
pub mod tape;
pub mod tensor;

pub use bundle::Bundle;
pub use init::glorot_uniform;
pub use optim::{AdamConfig, Optimizer, ParamSet};
pub use scalar::{Dtype, Scalar};
pub use tape::{Tape, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NdtError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("sequence of length {time} is shorter than kernel width {width}")]
    SequenceTooShort { time: usize, width: usize },
    #[error("max pool over empty time range")]
    EmptyTime,
    #[error("invalid shape {shape:?} for {op}")]
    InvalidShape { op: &'static str, shape: Vec<usize> },
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("malformed tensor bundle: {0}")]
    Bundle(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for NdtError {
    fn from(e: std::io::Error) -> Self {
        NdtError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, NdtError>;
