//! Corpus-level text-generation metrics and length/size bucket analysis.
//!
//! Every metric takes parallel candidate and reference token lists with one
//! reference per sample.

mod bleu;
mod buckets;
mod cider;
mod meteor;
mod ribes;
mod rouge;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::{bleu_n, sentence_bleu, BleuOptions};
pub use buckets::{bucket_report, buckets_csv, BucketDimension, BucketEdges, BucketRow, SampleStats};
pub use cider::{cider, cider_per_sample};
pub use meteor::{meteor, meteor_sentence};
pub use ribes::{ribes, ribes_sentence, word_rank_alignment};
pub use rouge::{lcs_len, rouge_l, rouge_l_sentence, ROUGE_BETA};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("no samples to score")]
    Empty,
    #[error("{candidates} candidates but {references} references")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("n-gram order must be in 1..=4, got {0}")]
    BadOrder(usize),
    #[error("CIDEr needs at least two reference sentences")]
    SingleSentence,
}

pub type Sentence = Vec<String>;

pub(crate) fn check_pairs(candidates: &[Sentence], references: &[Sentence]) -> Result<(), MetricError> {
    if candidates.len() != references.len() {
        return Err(MetricError::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

pub(crate) fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if n == 0 || tokens.len() < n {
        return m;
    }
    for w in tokens.windows(n) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Splits on whitespace; a convenience for fixtures and CLI input.
pub fn words(s: &str) -> Sentence {
    s.split_whitespace().map(str::to_string).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusScores {
    pub bleu_1: f64,
    pub bleu_2: f64,
    pub bleu_3: f64,
    pub bleu_4: f64,
    pub cider: f64,
    pub meteor: f64,
    pub ribes: f64,
    pub rouge_l: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleScores {
    pub id: String,
    /// Smoothed sentence-level BLEU-4.
    pub bleu_4: f64,
    pub cider: f64,
    pub meteor: f64,
    pub ribes: f64,
    pub rouge_l: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scores: CorpusScores,
    pub samples: Vec<SampleScores>,
    pub buckets: Vec<BucketRow>,
}

/// Every metric plus the bucket tables. `ids` and `stats` run parallel to
/// the candidates.
pub fn evaluate(
    ids: &[String],
    candidates: &[Sentence],
    references: &[Sentence],
    stats: &[SampleStats],
    edges: &BucketEdges,
) -> Result<EvalReport, MetricError> {
    check_pairs(candidates, references)?;
    if ids.len() != candidates.len() || stats.len() != candidates.len() {
        return Err(MetricError::LengthMismatch {
            candidates: candidates.len(),
            references: ids.len().min(stats.len()),
        });
    }
    let opts = BleuOptions::default();
    let bleu = |n| bleu_n(candidates, references, n, opts);
    // CIDEr is undefined for a one-sentence corpus; report 0 rather than
    // failing the whole evaluation.
    let cider_scores = match cider_per_sample(candidates, references) {
        Ok(v) => v,
        Err(MetricError::SingleSentence) => vec![0.0; candidates.len()],
        Err(e) => return Err(e),
    };
    let scores = CorpusScores {
        bleu_1: bleu(1)?,
        bleu_2: bleu(2)?,
        bleu_3: bleu(3)?,
        bleu_4: bleu(4)?,
        cider: mean(&cider_scores),
        meteor: meteor(candidates, references)?,
        ribes: ribes(candidates, references)?,
        rouge_l: rouge_l(candidates, references)?,
    };
    let samples = (0..candidates.len())
        .map(|i| {
            let (c, r) = (&candidates[i], &references[i]);
            SampleScores {
                id: ids[i].clone(),
                bleu_4: sentence_bleu(c, r, 4),
                cider: cider_scores[i],
                meteor: meteor_sentence(c, r),
                ribes: ribes_sentence(c, r),
                rouge_l: rouge_l_sentence(c, r),
            }
        })
        .collect();
    let buckets = bucket_report(candidates, references, stats, edges)?;
    Ok(EvalReport {
        scores,
        samples,
        buckets,
    })
}
