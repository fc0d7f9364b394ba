//! Dense `f64` tensors with tape-style reverse-mode differentiation.
//!
//! A [`Graph`] records every operation as it is evaluated. The operation set
//! is closed: matrix-vector products, element-wise arithmetic, concatenation,
//! sums, the `tanh`/`sigmoid`/`softmax` nonlinearities, embedding lookup,
//! dropout masks, row stacking, a fused cross-entropy and constant scaling.
//! Every model in this crate is written in terms of these ops.

mod gradcheck;
mod graph;
mod params;
mod tensor;

use thiserror::Error;

pub use gradcheck::{grad_check, GradCheckReport, GRAD_FLOOR};
pub use graph::{Gradients, Graph, NodeId, OpKind};
pub use params::{filled, glorot_uniform, ParamId, ParamStore};
pub use tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("invalid tensor shape {shape:?}: dimensions must be positive")]
    BadShape { shape: Vec<usize> },
    #[error("shape {shape:?} does not match data length {len}")]
    LengthMismatch { shape: Vec<usize>, len: usize },
    #[error("{op}: incompatible operand shapes {shapes:?}")]
    ShapeMismatch { op: OpKind, shapes: Vec<Vec<usize>> },
    #[error("{op}: index {index} out of range for length {len}")]
    IndexOutOfRange { op: OpKind, index: usize, len: usize },
    #[error("{op}: empty operand list")]
    EmptyInput { op: OpKind },
    #[error("{op}: produced a non-finite value")]
    NonFinite { op: OpKind },
    #[error("backward seed must be a scalar, got shape {shape:?}")]
    NonScalarSeed { shape: Vec<usize> },
    #[error("finite-difference step must lie in (0, 1e-2], got {0}")]
    BadEpsilon(f64),
    #[error("parameter {0:?} registered twice")]
    DuplicateParam(String),
}
