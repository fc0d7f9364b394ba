//! RIBES with the original defaults: normalized Kendall's τ over aligned
//! word positions, times unigram precision^0.25 and brevity penalty^0.10.

use super::{check_pairs, mean, MetricError, Sentence};

const ALPHA: f64 = 0.25;
const BETA: f64 = 0.10;

fn occurrences(hay: &[String], needle: &[String]) -> Vec<usize> {
    if needle.is_empty() || needle.len() > hay.len() {
        return Vec::new();
    }
    hay.windows(needle.len())
        .enumerate()
        .filter(|(_, w)| *w == needle)
        .map(|(i, _)| i)
        .collect()
}

/// Reference positions of alignable candidate words, in candidate order.
///
/// A word occurring once in each sentence aligns directly. Otherwise growing
/// context windows (right context first, then left) are tried until one
/// n-gram occurs exactly once in both sentences.
pub fn word_rank_alignment(candidate: &[String], reference: &[String]) -> Vec<usize> {
    let mut order = Vec::new();
    let h = candidate.len();
    for (i, w) in candidate.iter().enumerate() {
        let in_ref = occurrences(reference, std::slice::from_ref(w));
        if in_ref.is_empty() {
            continue;
        }
        let in_hyp = occurrences(candidate, std::slice::from_ref(w));
        if in_ref.len() == 1 && in_hyp.len() == 1 {
            order.push(in_ref[0]);
            continue;
        }
        let max_window = i.max(h - i + 1);
        for window in 1..max_window {
            if i + window < h {
                let gram = &candidate[i..=i + window];
                // Only n-grams no longer than the reference can match.
                if gram.len() <= reference.len() {
                    let r = occurrences(reference, gram);
                    if r.len() == 1 && occurrences(candidate, gram).len() == 1 {
                        order.push(r[0]);
                        break;
                    }
                }
            }
            if window <= i {
                let gram = &candidate[i - window..=i];
                if gram.len() <= reference.len() {
                    let r = occurrences(reference, gram);
                    if r.len() == 1 && occurrences(candidate, gram).len() == 1 {
                        order.push(r[0] + window);
                        break;
                    }
                }
            }
        }
    }
    order
}

/// `(τ + 1) / 2`: the fraction of position pairs in increasing order.
fn normalized_kendall(order: &[usize]) -> f64 {
    let n = order.len();
    let mut ascending = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if order[i] < order[j] {
                ascending += 1;
            }
        }
    }
    ascending as f64 / (n * (n - 1) / 2) as f64
}

pub fn ribes_sentence(candidate: &[String], reference: &[String]) -> f64 {
    let order = word_rank_alignment(candidate, reference);
    if order.len() < 2 {
        return 0.0;
    }
    let nkt = normalized_kendall(&order);
    let precision = order.len() as f64 / candidate.len() as f64;
    let bp = (1.0 - reference.len() as f64 / candidate.len() as f64).exp().min(1.0);
    nkt * precision.powf(ALPHA) * bp.powf(BETA)
}

/// Mean of per-sample scores.
pub fn ribes(candidates: &[Sentence], references: &[Sentence]) -> Result<f64, MetricError> {
    check_pairs(candidates, references)?;
    let s: Vec<f64> = candidates.iter().zip(references).map(|(c, r)| ribes_sentence(c, r)).collect();
    Ok(mean(&s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::words;

    #[test]
    fn identical_and_reversed() {
        let s = words("a b c d e");
        assert_eq!(ribes_sentence(&s, &s), 1.0);
        let mut r = s.clone();
        r.reverse();
        assert_eq!(ribes_sentence(&r, &s), 0.0);
    }

    #[test]
    fn one_adjacent_swap() {
        // Order [1, 0, 2, 3]: 5 of 6 pairs ascending; precision and BP are 1.
        let c = words("b a c d");
        let r = words("a b c d");
        assert_eq!(word_rank_alignment(&c, &r), [1, 0, 2, 3]);
        assert!((ribes_sentence(&c, &r) - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_words_use_context() {
        let c = words("the cat and the dog");
        let r = words("the dog and the cat");
        // "the"(0) -> "the cat" occurs once in r at 3; "the"(3) -> "the dog" at 0.
        assert_eq!(word_rank_alignment(&c, &r), [3, 4, 2, 0, 1]);
    }

    #[test]
    fn precision_and_brevity_factors() {
        let c = words("a b x");
        let r = words("a b c d");
        let want = 1.0 * (2.0f64 / 3.0).powf(0.25) * (1.0 - 4.0f64 / 3.0).exp().powf(0.1);
        assert!((ribes_sentence(&c, &r) - want).abs() < 1e-12);
        assert_eq!(ribes_sentence(&words("a z"), &r), 0.0);
    }
}
