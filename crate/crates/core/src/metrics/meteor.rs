//! METEOR restricted to exact unigram matches.
//!
//! Alignment rule: candidate words are visited left to right. A word is
//! aligned to the reference position right after the previous alignment when
//! that position holds the same word and is free (extending a chunk),
//! otherwise to the leftmost free identical reference word. This always finds
//! the maximum number of matches.

use super::{check_pairs, mean, MetricError, Sentence};

/// Aligned `(candidate, reference)` position pairs in candidate order.
fn align(candidate: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let mut used = vec![false; reference.len()];
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (i, w) in candidate.iter().enumerate() {
        let next = out.last().map(|&(_, j)| j + 1);
        let pick = next
            .filter(|&j| j < reference.len() && !used[j] && reference[j] == *w)
            .or_else(|| (0..reference.len()).find(|&j| !used[j] && reference[j] == *w));
        if let Some(j) = pick {
            used[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Runs of alignments adjacent in both sentences.
fn chunks(alignment: &[(usize, usize)]) -> usize {
    if alignment.is_empty() {
        return 0;
    }
    1 + alignment
        .windows(2)
        .filter(|p| !(p[1].0 == p[0].0 + 1 && p[1].1 == p[0].1 + 1))
        .count()
}

pub fn meteor_sentence(candidate: &[String], reference: &[String]) -> f64 {
    let a = align(candidate, reference);
    let m = a.len();
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let f = 10.0 * p * r / (r + 9.0 * p);
    let frag = chunks(&a) as f64 / m as f64;
    let penalty = 0.5 * frag.powi(3);
    f * (1.0 - penalty)
}

/// Mean of per-sample scores.
pub fn meteor(candidates: &[Sentence], references: &[Sentence]) -> Result<f64, MetricError> {
    check_pairs(candidates, references)?;
    let s: Vec<f64> = candidates.iter().zip(references).map(|(c, r)| meteor_sentence(c, r)).collect();
    Ok(mean(&s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::words;

    #[test]
    fn identical_pair_has_one_chunk() {
        let s = words("returns the number of items");
        let m = 5.0f64;
        assert!((meteor_sentence(&s, &s) - (1.0 - 0.5 * (1.0 / m).powi(3))).abs() < 1e-12);
        let one = words("x");
        assert_eq!(meteor_sentence(&one, &one), 0.5);
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(meteor(&[words("a b")], &[words("c d")]).unwrap(), 0.0);
    }

    #[test]
    fn swapped_halves_make_two_chunks() {
        let c = words("c d a b");
        let r = words("a b c d");
        // m = 4, P = R = 1, F = 1, chunks = 2.
        let want = 1.0 - 0.5 * (2.0f64 / 4.0).powi(3);
        assert!((meteor_sentence(&c, &r) - want).abs() < 1e-12);
    }

    #[test]
    fn repeated_words_prefer_contiguous_alignment() {
        let c = words("the cat the dog");
        let r = words("the dog the cat");
        let a = align(&c, &r);
        assert_eq!(a, [(0, 0), (1, 3), (2, 2), (3, 1)]);
        // Partial match: P = 2/3, R = 2/4.
        let c = words("a x b");
        let r = words("a b y z");
        let (p, rr) = (2.0 / 3.0, 0.5);
        let f = 10.0 * p * rr / (rr + 9.0 * p);
        let want = f * (1.0 - 0.5 * (2.0f64 / 2.0).powi(3));
        assert!((meteor_sentence(&c, &r) - want).abs() < 1e-12);
    }
}
