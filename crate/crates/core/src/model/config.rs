use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::tree::EncoderKind;

/// Architecture and training hyperparameters.
///
/// The defaults are the full-size configuration: a 2-layer model with
/// 256-dimensional embeddings and states, dropout 0.5, Adam at 0.001 and
/// mini-batches of 80.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub encoder: EncoderKind,
    /// 1 or 2. The decoder has the same depth as the encoder.
    pub layers: usize,
    /// Embedding and hidden size.
    pub dim: usize,
    pub dropout: f64,
    pub lr: f64,
    pub batch: usize,
    /// Upper bound on training epochs.
    pub epochs: usize,
    pub max_decode_len: usize,
    /// 1 is greedy decoding.
    pub beam: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderKind::MultiWay,
            layers: 2,
            dim: 256,
            dropout: 0.5,
            lr: 0.001,
            batch: 80,
            epochs: 30,
            max_decode_len: 30,
            beam: 1,
            seed: 1,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Config(m));
        if !(1..=2).contains(&self.layers) {
            return bad(format!("layers must be 1 or 2, got {}", self.layers));
        }
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.batch == 0 {
            return bad("batch must be at least 1".into());
        }
        if self.beam == 0 {
            return bad("beam must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if !(self.adam_eps > 0.0) {
            return bad("Adam epsilon must be positive".into());
        }
        Ok(())
    }

    /// Parses the TOML config file format; absent keys take their defaults.
    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        let c: Self = toml::from_str(text).map_err(|e| ModelError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
