//! Tree-structured encoders: Child-sum, N-ary and Multi-way Tree-LSTM cells,
//! multi-layer tree encoding, and the linearized-sequence baseline.

mod cells;
mod encoder;

pub use cells::{
    child_sum_step, multiway_step, nary_step, ChildSumParams, MultiwayParams, NaryParams,
};
pub use encoder::{
    encode, source_tokens, Dropout, EncodedSource, EncoderKind, EncoderParams, LayerParams, NodeState,
};
