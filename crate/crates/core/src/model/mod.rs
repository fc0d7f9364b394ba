//! The encoder-decoder summarizer: embeddings, a tree or sequence encoder,
//! additive attention, a stacked LSTM decoder fed with the previous context
//! vector, training with Adam, generation and checkpoints.

mod attention;
mod checkpoint;
mod config;
mod generate;
mod network;
mod train;

use thiserror::Error;

use crate::autodiff::TensorError;
use crate::corpus::CorpusError;
use crate::lstm::CellError;
use crate::metrics::MetricError;

pub use attention::{attention_weights, context_vector, AttentionParams, Memory};
pub use checkpoint::{
    load_checkpoint, read_manifest, save_checkpoint, CheckpointManifest, ParamEntry, VocabEntry, CHECKPOINT_MAGIC,
};
pub use config::ModelConfig;
pub use generate::{evaluate_model, Generation};
pub use network::{
    batch_loss, decode_step, encode_input, sample_loss, token_count, DecoderState, EncodedInput, ModelParams,
    PreparedSample, PreparedSource, Step, Summarizer,
};
pub use train::{fit, Adam, EpochRecord, FitOutcome, LogEntry, Trainer};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Cell(#[from] CellError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("attention over an empty encoder output")]
    EmptyMemory,
    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite loss or gradient at epoch {epoch}, step {step}")]
    NonFinite { epoch: usize, step: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{side} vocabulary mismatch: checkpoint has {expected}, data has {found}")]
    VocabMismatch {
        side: &'static str,
        expected: String,
        found: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ModelError {
    /// The underlying tensor error, if this is one (directly or through a
    /// cell).
    pub fn as_tensor_error(&self) -> Option<&TensorError> {
        match self {
            ModelError::Tensor(t) | ModelError::Cell(CellError::Tensor(t)) => Some(t),
            _ => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, ModelError::NonFinite { .. })
            || matches!(self.as_tensor_error(), Some(TensorError::NonFinite { .. }))
    }
}
