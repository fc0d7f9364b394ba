use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{bleu_n, check_pairs, BleuOptions, MetricError, Sentence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BucketDimension {
    CommentLength,
    NodeCount,
    MaxDegree,
}

impl BucketDimension {
    pub const ALL: [BucketDimension; 3] = [
        BucketDimension::CommentLength,
        BucketDimension::NodeCount,
        BucketDimension::MaxDegree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BucketDimension::CommentLength => "comment_length",
            BucketDimension::NodeCount => "node_count",
            BucketDimension::MaxDegree => "max_degree",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleStats {
    /// Reference comment length in tokens.
    pub comment_len: usize,
    pub node_count: usize,
    pub max_degree: usize,
}

impl SampleStats {
    fn get(&self, d: BucketDimension) -> usize {
        match d {
            BucketDimension::CommentLength => self.comment_len,
            BucketDimension::NodeCount => self.node_count,
            BucketDimension::MaxDegree => self.max_degree,
        }
    }
}

/// Increasing bucket boundaries per dimension. Edges `e0 < e1 < ... < ek`
/// define half-open buckets `[e0, e1) ... [ek, ∞)`, plus `[0, e0)` when
/// `e0 > 0`, so every value falls in exactly one bucket.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BucketEdges {
    pub comment_length: Vec<usize>,
    pub node_count: Vec<usize>,
    pub max_degree: Vec<usize>,
}

impl Default for BucketEdges {
    fn default() -> Self {
        Self {
            comment_length: vec![0, 5, 10, 15, 20, 30],
            node_count: vec![0, 10, 20, 40, 60, 80, 100],
            max_degree: vec![0, 2, 4, 6, 8, 10],
        }
    }
}

impl BucketEdges {
    pub fn for_dimension(&self, d: BucketDimension) -> &[usize] {
        match d {
            BucketDimension::CommentLength => &self.comment_length,
            BucketDimension::NodeCount => &self.node_count,
            BucketDimension::MaxDegree => &self.max_degree,
        }
    }

    fn ranges(&self, d: BucketDimension) -> Vec<(usize, Option<usize>)> {
        let mut e: Vec<usize> = self.for_dimension(d).to_vec();
        e.sort_unstable();
        e.dedup();
        if e.first() != Some(&0) {
            e.insert(0, 0);
        }
        (0..e.len()).map(|i| (e[i], e.get(i + 1).copied())).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketRow {
    pub dimension: BucketDimension,
    /// Inclusive lower bound.
    pub lo: usize,
    /// Exclusive upper bound; `None` is unbounded.
    pub hi: Option<usize>,
    pub count: usize,
    /// Corpus BLEU-4 within the bucket; `None` for an empty bucket.
    pub bleu_4: Option<f64>,
}

/// Corpus BLEU-4 recomputed inside each bucket of each dimension.
pub fn bucket_report(
    candidates: &[Sentence],
    references: &[Sentence],
    stats: &[SampleStats],
    edges: &BucketEdges,
) -> Result<Vec<BucketRow>, MetricError> {
    check_pairs(candidates, references)?;
    if stats.len() != candidates.len() {
        return Err(MetricError::LengthMismatch {
            candidates: candidates.len(),
            references: stats.len(),
        });
    }
    let mut rows = Vec::new();
    for d in BucketDimension::ALL {
        for (lo, hi) in edges.ranges(d) {
            let members: Vec<usize> = (0..stats.len())
                .filter(|&i| {
                    let v = stats[i].get(d);
                    v >= lo && hi.is_none_or(|h| v < h)
                })
                .collect();
            let bleu_4 = if members.is_empty() {
                None
            } else {
                let c: Vec<Sentence> = members.iter().map(|&i| candidates[i].clone()).collect();
                let r: Vec<Sentence> = members.iter().map(|&i| references[i].clone()).collect();
                Some(bleu_n(&c, &r, 4, BleuOptions::default())?)
            };
            rows.push(BucketRow {
                dimension: d,
                lo,
                hi,
                count: members.len(),
                bleu_4,
            });
        }
    }
    Ok(rows)
}

/// `dimension,lo,hi,count,bleu_4` with empty cells for unbounded/null.
pub fn buckets_csv(rows: &[BucketRow]) -> String {
    let mut s = String::from("dimension,lo,hi,count,bleu_4\n");
    for r in rows {
        let hi = r.hi.map(|h| h.to_string()).unwrap_or_default();
        let b = r.bleu_4.map(|b| format!("{b}")).unwrap_or_default();
        writeln!(s, "{},{},{},{},{}", r.dimension.as_str(), r.lo, hi, r.count, b).expect("string write");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::words;

    fn fixture() -> (Vec<Sentence>, Vec<Sentence>, Vec<SampleStats>) {
        let refs: Vec<Sentence> = [
            "returns the first element of the list",
            "adds two numbers together",
            "checks if the queue is empty now",
            "prints a greeting",
        ]
        .iter()
        .map(|s| words(s))
        .collect();
        let cands: Vec<Sentence> = [
            "returns the first element of a list",
            "adds two numbers together",
            "checks if the queue is full now",
            "prints the greeting",
        ]
        .iter()
        .map(|s| words(s))
        .collect();
        let stats = refs
            .iter()
            .enumerate()
            .map(|(i, r)| SampleStats {
                comment_len: r.len(),
                node_count: 10 + 30 * i,
                max_degree: i,
            })
            .collect();
        (cands, refs, stats)
    }

    #[test]
    fn single_bucket_equals_corpus_bleu() {
        let (c, r, s) = fixture();
        let edges = BucketEdges {
            comment_length: vec![0],
            node_count: vec![0],
            max_degree: vec![0],
        };
        let rows = bucket_report(&c, &r, &s, &edges).unwrap();
        let whole = bleu_n(&c, &r, 4, BleuOptions::default()).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|row| row.bleu_4 == Some(whole) && row.count == 4));
    }

    #[test]
    fn two_buckets_match_subset_runs_and_empty_is_null() {
        let (c, r, s) = fixture();
        let edges = BucketEdges {
            comment_length: vec![0, 5, 100],
            node_count: vec![0, 30],
            max_degree: vec![0],
        };
        let rows = bucket_report(&c, &r, &s, &edges).unwrap();
        let cl: Vec<&BucketRow> = rows.iter().filter(|x| x.dimension == BucketDimension::CommentLength).collect();
        assert_eq!(cl.len(), 3);
        let short: Vec<usize> = vec![1, 3];
        let long: Vec<usize> = vec![0, 2];
        for (row, idx) in [(cl[0], &short), (cl[1], &long)] {
            let cs: Vec<Sentence> = idx.iter().map(|&i| c[i].clone()).collect();
            let rs: Vec<Sentence> = idx.iter().map(|&i| r[i].clone()).collect();
            assert_eq!(row.bleu_4, Some(bleu_n(&cs, &rs, 4, BleuOptions::default()).unwrap()));
        }
        assert_eq!(cl[2].count, 0);
        assert_eq!(cl[2].bleu_4, None);
        let csv = buckets_csv(&rows);
        assert!(csv.contains("comment_length,100,,0,\n"));
        let nodes: usize = rows.iter().filter(|x| x.dimension == BucketDimension::NodeCount).map(|x| x.count).sum();
        assert_eq!(nodes, 4);
    }

    #[test]
    fn missing_zero_edge_adds_lowest_bucket() {
        let (c, r, s) = fixture();
        let edges = BucketEdges {
            comment_length: vec![5],
            node_count: vec![0],
            max_degree: vec![0],
        };
        let rows = bucket_report(&c, &r, &s, &edges).unwrap();
        assert_eq!(rows[0].lo, 0);
        assert_eq!(rows[0].hi, Some(5));
    }
}
