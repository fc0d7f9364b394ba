use super::{check_pairs, ngram_counts, MetricError, Sentence};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BleuOptions {
    /// Add one to the matched and total counts of every order n ≥ 2.
    pub smoothing: bool,
}

/// (clipped matches, candidate n-grams) for one pair.
fn matches(candidate: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let c = ngram_counts(candidate, n);
    let r = ngram_counts(reference, n);
    let matched = c.iter().map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0))).sum();
    (matched, candidate.len().saturating_sub(n - 1))
}

fn combine(counts: &[(usize, usize)], cand_len: usize, ref_len: usize, smoothing: bool) -> f64 {
    if cand_len == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for (k, &(m, t)) in counts.iter().enumerate() {
        let (m, t) = if smoothing && k > 0 {
            (m as f64 + 1.0, t as f64 + 1.0)
        } else {
            (m as f64, t as f64)
        };
        if m == 0.0 || t == 0.0 {
            return 0.0;
        }
        log_sum += (m / t).ln();
    }
    let bp = if cand_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    };
    bp * (log_sum / counts.len() as f64).exp()
}

/// Corpus BLEU-N: clipped n-gram matches and candidate n-gram totals are
/// summed over the corpus before taking precisions; the brevity penalty uses
/// total candidate and reference lengths.
pub fn bleu_n(
    candidates: &[Sentence],
    references: &[Sentence],
    n: usize,
    opts: BleuOptions,
) -> Result<f64, MetricError> {
    check_pairs(candidates, references)?;
    if !(1..=4).contains(&n) {
        return Err(MetricError::BadOrder(n));
    }
    let mut counts = vec![(0usize, 0usize); n];
    let (mut c_len, mut r_len) = (0, 0);
    for (c, r) in candidates.iter().zip(references) {
        for (k, slot) in counts.iter_mut().enumerate() {
            let (m, t) = matches(c, r, k + 1);
            slot.0 += m;
            slot.1 += t;
        }
        c_len += c.len();
        r_len += r.len();
    }
    Ok(combine(&counts, c_len, r_len, opts.smoothing))
}

/// Smoothed sentence-level BLEU-N, for per-sample diagnostics.
pub fn sentence_bleu(candidate: &[String], reference: &[String], n: usize) -> f64 {
    let counts: Vec<(usize, usize)> = (1..=n).map(|k| matches(candidate, reference, k)).collect();
    combine(&counts, candidate.len(), reference.len(), true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::words;

    fn corpus(xs: &[&str]) -> Vec<Sentence> {
        xs.iter().map(|s| words(s)).collect()
    }

    #[test]
    fn identical_and_disjoint() {
        let a = corpus(&["the cat sat on the mat", "a b c d"]);
        for n in 1..=4 {
            assert_eq!(bleu_n(&a, &a, n, BleuOptions::default()).unwrap(), 1.0);
        }
        let b = corpus(&["x y z w v u", "p q r s"]);
        assert_eq!(bleu_n(&b, &a, 1, BleuOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn clipped_unigram_precision() {
        // Candidate longer than the reference: brevity penalty is 1.
        let c = corpus(&["the the the"]);
        let r = corpus(&["the cat"]);
        let got = bleu_n(&c, &r, 1, BleuOptions::default()).unwrap();
        assert!((got - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn brevity_penalty_for_short_candidates() {
        let c = corpus(&["the cat"]);
        let r = corpus(&["the cat sat down"]);
        let got = bleu_n(&c, &r, 1, BleuOptions::default()).unwrap();
        assert!((got - (1.0f64 - 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn smoothing_rescues_missing_higher_orders() {
        let c = corpus(&["the cat the dog"]);
        let r = corpus(&["the dog the cat"]);
        assert_eq!(bleu_n(&c, &r, 4, BleuOptions::default()).unwrap(), 0.0);
        let s = bleu_n(&c, &r, 4, BleuOptions { smoothing: true }).unwrap();
        // p1 = 4/4, p2 = (2+1)/(3+1), p3 = (0+1)/(2+1), p4 = (0+1)/(1+1)
        let want = (1.0f64 * 0.75 * (1.0 / 3.0) * 0.5).powf(0.25);
        assert!((s - want).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let a = corpus(&["a"]);
        assert_eq!(bleu_n(&[], &[], 1, BleuOptions::default()), Err(MetricError::Empty));
        assert!(matches!(bleu_n(&a, &[], 1, BleuOptions::default()), Err(MetricError::LengthMismatch { .. })));
        assert_eq!(bleu_n(&a, &a, 5, BleuOptions::default()), Err(MetricError::BadOrder(5)));
    }

    #[test]
    fn bleu1_at_least_bleu4_when_candidates_are_subsequences() {
        let r = corpus(&["one two three four five six", "alpha beta gamma delta epsilon"]);
        let c = corpus(&["one two three four five", "alpha beta gamma delta"]);
        let b1 = bleu_n(&c, &r, 1, BleuOptions::default()).unwrap();
        let b4 = bleu_n(&c, &r, 4, BleuOptions::default()).unwrap();
        assert!(b1 >= b4 && b4 > 0.0);
    }
}
