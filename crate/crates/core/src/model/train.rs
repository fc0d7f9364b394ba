use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{sample_loss, token_count, PreparedSample, Summarizer};
use super::{evaluate_model, ModelConfig, ModelError};
use crate::autodiff::{Graph, Gradients, ParamStore};
use crate::corpus::make_batches;
use crate::metrics::{bleu_n, BleuOptions, BucketEdges, Sentence};
use crate::tree::Dropout;

/// Adam with bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(store: &ParamStore, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        let zeros: Vec<Vec<f64>> = store.iter().map(|(_, _, t)| vec![0.0; t.len()]).collect();
        Self {
            lr,
            beta1,
            beta2,
            eps,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn from_config(store: &ParamStore, c: &ModelConfig) -> Self {
        Self::new(store, c.lr, c.adam_beta1, c.adam_beta2, c.adam_eps)
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// First and second moment estimates of parameter `index`.
    pub fn moments(&self, index: usize) -> (&[f64], &[f64]) {
        (&self.m[index], &self.v[index])
    }

    /// One update; parameters without a gradient are treated as having a
    /// zero gradient.
    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        let ids: Vec<_> = store.ids().collect();
        for id in ids {
            let k = id.index();
            let g = grads.get(id).map(|t| t.data());
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            let p = store.get_mut(id).data_mut();
            for j in 0..p.len() {
                let gj = g.map_or(0.0, |g| g[j]);
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * gj;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * gj * gj;
                let mh = m[j] / c1;
                let vh = v[j] / c2;
                p[j] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}

/// Mutable training state: the model, the optimizer and the dropout stream.
pub struct Trainer {
    pub model: Summarizer,
    pub adam: Adam,
    rng: ChaCha8Rng,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed optimizer steps.
    pub step: usize,
}

/// Summary of one training epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub steps: usize,
    /// Token-weighted mean training loss over the epoch.
    pub train_loss: f64,
    pub valid_bleu_1: Option<f64>,
    pub valid_bleu_4: Option<f64>,
}

/// One line of the JSON-lines training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogEntry {
    Step { epoch: usize, step: usize, loss: f64 },
    Epoch(EpochRecord),
}

fn numeric(e: ModelError, epoch: usize, step: usize) -> ModelError {
    if e.is_numeric() {
        ModelError::NonFinite { epoch, step }
    } else {
        e
    }
}

impl Trainer {
    pub fn new(model: Summarizer) -> Self {
        let adam = Adam::from_config(&model.store, &model.config);
        // A stream separate from parameter initialization.
        let rng = ChaCha8Rng::seed_from_u64(model.config.seed ^ 0x5eed_d40f);
        Self {
            model,
            adam,
            rng,
            epoch: 0,
            step: 0,
        }
    }

    /// Forward and backward over `batch` with dropout; gradients are averaged
    /// over the batch token count. Returns the mean token loss.
    pub fn gradients(&mut self, batch: &[&PreparedSample]) -> Result<(f64, Gradients), ModelError> {
        if batch.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let scale = 1.0 / token_count(batch) as f64;
        let p = self.model.config.dropout;
        let mut total = Gradients::zeros_like(&self.model.store);
        let mut loss = 0.0;
        for s in batch {
            let mut g = Graph::new(&self.model.store);
            let mut drop = Dropout { p, rng: &mut self.rng };
            let l = sample_loss(&mut g, &self.model.params, s, (p > 0.0).then_some(&mut drop))?;
            loss += g.value(l).data()[0];
            let l = g.scale(l, scale)?;
            total.accumulate(&g.backward(l)?);
        }
        Ok((loss * scale, total))
    }

    /// One optimizer step on `batch`.
    pub fn train_step(&mut self, batch: &[&PreparedSample]) -> Result<f64, ModelError> {
        let (epoch, step) = (self.epoch, self.step);
        let (loss, grads) = self.gradients(batch).map_err(|e| numeric(e, epoch, step))?;
        if !loss.is_finite() || !grads.all_finite() {
            return Err(ModelError::NonFinite { epoch, step });
        }
        self.adam.step(&mut self.model.store, &grads);
        if self.model.store.iter().any(|(_, _, t)| !t.all_finite()) {
            return Err(ModelError::NonFinite { epoch, step });
        }
        self.step += 1;
        Ok(loss)
    }

    /// One pass over `data` in shuffled mini-batches. `on_step` sees every
    /// step's loss.
    pub fn train_epoch(
        &mut self,
        data: &[PreparedSample],
        mut on_step: impl FnMut(&LogEntry),
    ) -> Result<EpochRecord, ModelError> {
        if data.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let seed = self.model.config.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(self.epoch as u64);
        let batches = make_batches(data, self.model.config.batch, seed)?;
        let (mut weighted, mut tokens, mut steps) = (0.0, 0usize, 0usize);
        for idx in &batches {
            let batch: Vec<&PreparedSample> = idx.iter().map(|&i| &data[i]).collect();
            let loss = self.train_step(&batch)?;
            let n = token_count(&batch);
            weighted += loss * n as f64;
            tokens += n;
            steps += 1;
            on_step(&LogEntry::Step {
                epoch: self.epoch,
                step: self.step,
                loss,
            });
        }
        let rec = EpochRecord {
            epoch: self.epoch,
            steps,
            train_loss: weighted / tokens as f64,
            valid_bleu_1: None,
            valid_bleu_4: None,
        };
        self.epoch += 1;
        Ok(rec)
    }
}

/// Result of [`fit`]. The trainer's model holds the selected parameters.
#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub best_epoch: usize,
    pub best_bleu_4: f64,
    pub log: Vec<LogEntry>,
}

/// Corpus BLEU-1 and BLEU-4 of greedy/beam output on `valid`.
fn validation_bleu(model: &Summarizer, valid: &[PreparedSample]) -> Result<(f64, f64), ModelError> {
    let (_, gens) = evaluate_model(model, valid, &BucketEdges::default())?;
    let cands: Vec<Sentence> = gens.into_iter().map(|g| g.words).collect();
    let refs: Vec<Sentence> = valid.iter().map(|s| s.reference.clone()).collect();
    let o = BleuOptions::default();
    Ok((bleu_n(&cands, &refs, 1, o)?, bleu_n(&cands, &refs, 4, o)?))
}

/// Trains for `config.epochs` epochs, validating after each one and keeping
/// the parameters with the best validation BLEU-4 (ties: higher BLEU-1, then
/// the earlier epoch). Without validation data the last epoch is kept.
///
/// `on_log` receives every log entry as it is produced; `on_best` is called
/// whenever a new best model is selected, e.g. to write a checkpoint.
pub fn fit(
    trainer: &mut Trainer,
    train: &[PreparedSample],
    valid: &[PreparedSample],
    mut on_log: impl FnMut(&LogEntry),
    mut on_best: impl FnMut(&Summarizer, &EpochRecord) -> Result<(), ModelError>,
) -> Result<FitOutcome, ModelError> {
    let mut log = Vec::new();
    let mut best: Option<(f64, f64, usize, ParamStore)> = None;
    for _ in 0..trainer.model.config.epochs {
        let mut rec = trainer.train_epoch(train, |e| {
            on_log(e);
            log.push(e.clone());
        })?;
        let (b1, b4) = if valid.is_empty() {
            (0.0, 0.0)
        } else {
            let (b1, b4) = validation_bleu(&trainer.model, valid)?;
            rec.valid_bleu_1 = Some(b1);
            rec.valid_bleu_4 = Some(b4);
            (b1, b4)
        };
        let entry = LogEntry::Epoch(rec.clone());
        on_log(&entry);
        log.push(entry);
        let better = match &best {
            None => true,
            Some((bb4, bb1, _, _)) => valid.is_empty() || b4 > *bb4 || (b4 == *bb4 && b1 > *bb1),
        };
        if better {
            best = Some((b4, b1, rec.epoch, trainer.model.store.clone()));
            on_best(&trainer.model, &rec)?;
        }
    }
    let Some((b4, _, epoch, store)) = best else {
        return Err(ModelError::Config("epochs must be at least 1".into()));
    };
    trainer.model.store = store;
    Ok(FitOutcome {
        best_epoch: epoch,
        best_bleu_4: b4,
        log,
    })
}
