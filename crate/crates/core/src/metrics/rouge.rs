use super::{check_pairs, mean, MetricError, Sentence};

/// Recall weight of the LCS F-measure, as in the common captioning toolkit.
pub const ROUGE_BETA: f64 = 1.2;

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `(1 + β²) P R / (R + β² P)` over the longest common subsequence.
pub fn rouge_l_sentence(candidate: &[String], reference: &[String]) -> f64 {
    let l = lcs_len(candidate, reference);
    if l == 0 {
        return 0.0;
    }
    let p = l as f64 / candidate.len() as f64;
    let r = l as f64 / reference.len() as f64;
    let b2 = ROUGE_BETA * ROUGE_BETA;
    (1.0 + b2) * p * r / (r + b2 * p)
}

/// Mean of per-sample ROUGE-L.
pub fn rouge_l(candidates: &[Sentence], references: &[Sentence]) -> Result<f64, MetricError> {
    check_pairs(candidates, references)?;
    let scores: Vec<f64> = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| rouge_l_sentence(c, r))
        .collect();
    Ok(mean(&scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::words;

    #[test]
    fn lcs_example() {
        let c = words("a b c d");
        let r = words("a c d");
        assert_eq!(lcs_len(&c, &r), 3);
        let (p, rec, b2) = (0.75, 1.0, 1.44);
        let want = (1.0 + b2) * p * rec / (rec + b2 * p);
        assert!((rouge_l_sentence(&c, &r) - want).abs() < 1e-12);
    }

    #[test]
    fn extremes() {
        let a = vec![words("x y z")];
        assert_eq!(rouge_l(&a, &a).unwrap(), 1.0);
        assert_eq!(rouge_l(&a, &[words("p q")]).unwrap(), 0.0);
        assert_eq!(rouge_l_sentence(&[], &words("p")), 0.0);
        assert_eq!(rouge_l(&[], &[]), Err(MetricError::Empty));
    }
}
