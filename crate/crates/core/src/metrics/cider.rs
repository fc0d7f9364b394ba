//! CIDEr: mean over n = 1..4 of the cosine between TF-IDF n-gram vectors of
//! candidate and reference, times 10. Document frequencies are counted over
//! the reference sentences; `idf = ln(N / max(1, df))`.

use std::collections::BTreeMap;

use super::{check_pairs, mean, ngram_counts, MetricError, Sentence};

const MAX_N: usize = 4;

type Vector<'a> = BTreeMap<&'a [String], f64>;

fn tfidf<'a>(tokens: &'a [String], n: usize, df: &BTreeMap<&[String], usize>, log_n: f64) -> Vector<'a> {
    ngram_counts(tokens, n)
        .into_iter()
        .map(|(g, c)| {
            let d = df.get(g).copied().unwrap_or(0).max(1) as f64;
            (g, c as f64 * (log_n - d.ln()))
        })
        .collect()
}

fn cosine(a: &Vector<'_>, b: &Vector<'_>) -> f64 {
    // Ordered maps and a single square root make identical vectors score
    // exactly 1.
    let sa: f64 = a.values().map(|x| x * x).sum();
    let sb: f64 = b.values().map(|x| x * x).sum();
    if sa == 0.0 || sb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().map(|(g, x)| x * b.get(g).copied().unwrap_or(0.0)).sum();
    dot / (sa * sb).sqrt()
}

pub fn cider_per_sample(candidates: &[Sentence], references: &[Sentence]) -> Result<Vec<f64>, MetricError> {
    check_pairs(candidates, references)?;
    if references.len() < 2 {
        return Err(MetricError::SingleSentence);
    }
    let log_n = (references.len() as f64).ln();
    let mut scores = vec![0.0; candidates.len()];
    for n in 1..=MAX_N {
        let mut df: BTreeMap<&[String], usize> = BTreeMap::new();
        for r in references {
            for g in ngram_counts(r, n).into_keys() {
                *df.entry(g).or_insert(0) += 1;
            }
        }
        for (i, (c, r)) in candidates.iter().zip(references).enumerate() {
            let vc = tfidf(c, n, &df, log_n);
            let vr = tfidf(r, n, &df, log_n);
            scores[i] += cosine(&vc, &vr);
        }
    }
    Ok(scores.into_iter().map(|s| 10.0 * s / MAX_N as f64).collect())
}

/// Corpus mean of per-sample CIDEr.
pub fn cider(candidates: &[Sentence], references: &[Sentence]) -> Result<f64, MetricError> {
    Ok(mean(&cider_per_sample(candidates, references)?))
}
