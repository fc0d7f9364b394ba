//! Source code summarization with tree-structured LSTM encoders.
//!
//! The crate covers the whole pipeline: syntax trees and a small parser
//! ([`ast`]), a reverse-mode autodiff core ([`autodiff`]), chain and tree LSTM
//! cells ([`lstm`], [`tree`]), corpus preparation ([`corpus`]), the
//! encoder-decoder model with training and decoding ([`model`]), and the
//! evaluation metrics ([`metrics`]).

pub mod ast;
pub mod autodiff;
pub mod corpus;
pub mod lstm;
pub mod metrics;
pub mod model;
pub mod synth;
pub mod tree;
#[cfg(test)]
mod testutil;

pub use ast::{Ast, AstStats, NodeKind};
pub use corpus::{RawRecord, Sample, Vocab};
pub use metrics::{BucketEdges, EvalReport};
pub use model::{Generation, ModelConfig, ModelError, Summarizer};
pub use tree::EncoderKind;
