use serde::{Deserialize, Serialize};

use super::network::{decode_step, encode_input, DecoderState, PreparedSample, PreparedSource, Summarizer};
use super::ModelError;
use crate::autodiff::Graph;
use crate::corpus::{BOS_ID, EOS_ID, PAD_ID};
use crate::metrics::{evaluate, BucketEdges, EvalReport, Sentence};

/// A decoded comment with its attention matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub ids: Vec<usize>,
    pub words: Vec<String>,
    /// One row per emitted word, one column per encoder position.
    pub attention: Vec<Vec<f64>>,
    /// AST node described by each attention column.
    pub positions: Vec<usize>,
    /// Sum of token log-probabilities, EOS included when emitted.
    pub log_prob: f64,
    pub finished: bool,
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    logits.iter().map(|x| x - lse).collect()
}

fn allowed(word: usize) -> bool {
    word != PAD_ID && word != BOS_ID
}

#[derive(Clone)]
struct Hyp {
    ids: Vec<usize>,
    log_prob: f64,
    state: DecoderState,
    rows: Vec<Vec<f64>>,
    finished: bool,
}

impl Hyp {
    /// Length-normalized score; EOS counts as a token.
    fn score(&self) -> f64 {
        let len = self.ids.len() + usize::from(self.finished);
        self.log_prob / len.max(1) as f64
    }
}

impl Summarizer {
    /// Greedy decoding: the argmax word (PAD and BOS excluded) at each step
    /// until EOS or `max_len` words.
    pub fn greedy(&self, input: &PreparedSource, max_len: usize) -> Result<Generation, ModelError> {
        let p = &self.params;
        let mut g = Graph::new(&self.store);
        let enc = encode_input(&mut g, p, input, None)?;
        let mut state = enc.initial_state(&mut g, p.dim);
        let mut out = Generation {
            ids: Vec::new(),
            words: Vec::new(),
            attention: Vec::new(),
            positions: enc.encoded.positions.clone(),
            log_prob: 0.0,
            finished: false,
        };
        while out.ids.len() < max_len {
            let step = decode_step(&mut g, p, &state, &enc.memory, None)?;
            let lp = log_softmax(g.value(step.logits).data());
            let (best, &score) = lp
                .iter()
                .enumerate()
                .filter(|(w, _)| allowed(*w))
                .fold((usize::MAX, &f64::NEG_INFINITY), |acc, (w, s)| if *s > *acc.1 { (w, s) } else { acc });
            out.log_prob += score;
            if best == EOS_ID {
                out.finished = true;
                break;
            }
            out.ids.push(best);
            out.attention.push(g.value(step.alpha).data().to_vec());
            state = step.next_state(best);
        }
        out.words = self.comment_vocab.decode(&out.ids);
        Ok(out)
    }

    /// Beam search ranking hypotheses by mean token log-probability. A beam
    /// of 1 reproduces [`Summarizer::greedy`].
    pub fn beam_search(&self, input: &PreparedSource, beam: usize, max_len: usize) -> Result<Generation, ModelError> {
        let p = &self.params;
        let beam = beam.max(1);
        let mut g = Graph::new(&self.store);
        let enc = encode_input(&mut g, p, input, None)?;
        let start = enc.initial_state(&mut g, p.dim);
        let mut live = vec![Hyp {
            ids: Vec::new(),
            log_prob: 0.0,
            state: start,
            rows: Vec::new(),
            finished: false,
        }];
        let mut done: Vec<Hyp> = Vec::new();
        for _ in 0..max_len {
            if live.is_empty() || done.len() >= beam {
                break;
            }
            let mut cands: Vec<(f64, usize, usize, usize)> = Vec::new();
            let mut steps = Vec::with_capacity(live.len());
            for (h, hyp) in live.iter().enumerate() {
                let step = decode_step(&mut g, p, &hyp.state, &enc.memory, None)?;
                let lp = log_softmax(g.value(step.logits).data());
                for (w, s) in lp.iter().enumerate().filter(|(w, _)| allowed(*w)) {
                    cands.push((hyp.log_prob + s, h, w, cands.len()));
                }
                steps.push(step);
            }
            // Highest total log-probability first; ties keep generation order.
            cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.3.cmp(&b.3)));
            let mut next = Vec::with_capacity(beam);
            for (lp, h, w, _) in cands {
                if next.len() == beam {
                    break;
                }
                let parent = &live[h];
                if w == EOS_ID {
                    done.push(Hyp {
                        log_prob: lp,
                        finished: true,
                        ..parent.clone()
                    });
                    if done.len() >= beam {
                        break;
                    }
                } else {
                    let mut ids = parent.ids.clone();
                    ids.push(w);
                    let mut rows = parent.rows.clone();
                    rows.push(g.value(steps[h].alpha).data().to_vec());
                    next.push(Hyp {
                        ids,
                        log_prob: lp,
                        state: steps[h].next_state(w),
                        rows,
                        finished: false,
                    });
                }
            }
            live = next;
        }
        done.extend(live);
        let best = done
            .into_iter()
            .reduce(|a, b| if b.score() > a.score() { b } else { a })
            .expect("at least the start hypothesis");
        Ok(Generation {
            words: self.comment_vocab.decode(&best.ids),
            ids: best.ids,
            attention: best.rows,
            positions: enc.encoded.positions.clone(),
            log_prob: best.log_prob,
            finished: best.finished,
        })
    }

    /// Decodes with the configured beam width.
    pub fn generate(&self, input: &PreparedSource, beam: usize, max_len: usize) -> Result<Generation, ModelError> {
        if beam <= 1 {
            self.greedy(input, max_len)
        } else {
            self.beam_search(input, beam, max_len)
        }
    }
}

/// Generates for every sample with the model's decoding settings and scores
/// the output against the references.
pub fn evaluate_model(
    model: &Summarizer,
    samples: &[PreparedSample],
    edges: &BucketEdges,
) -> Result<(EvalReport, Vec<Generation>), ModelError> {
    let gens = samples
        .iter()
        .map(|s| model.generate(&s.input, model.config.beam, model.config.max_decode_len))
        .collect::<Result<Vec<_>, _>>()?;
    let ids: Vec<String> = samples.iter().map(|s| s.id.clone()).collect();
    let cands: Vec<Sentence> = gens.iter().map(|g| g.words.clone()).collect();
    let refs: Vec<Sentence> = samples.iter().map(|s| s.reference.clone()).collect();
    let stats: Vec<_> = samples.iter().map(|s| s.stats).collect();
    Ok((evaluate(&ids, &cands, &refs, &stats, edges)?, gens))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Graph;
    use crate::model::network::tests::tiny_model;
    use crate::testutil::random_store_values;
    use crate::tree::EncoderKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_max_len_is_empty() {
        let (m, prepared) = tiny_model(EncoderKind::MultiWay, 1, 4);
        for beam in [1, 3] {
            let out = m.generate(&prepared[0].input, beam, 0).unwrap();
            assert!(out.words.is_empty() && out.attention.is_empty());
        }
    }

    #[test]
    fn greedy_is_the_argmax_rollout() {
        let (mut m, prepared) = tiny_model(EncoderKind::ChildSum, 2, 5);
        random_store_values(&mut m.store, &mut ChaCha8Rng::seed_from_u64(3), 1.0);
        let input = &prepared[0].input;
        let out = m.greedy(input, 6).unwrap();

        let mut g = Graph::new(&m.store);
        let enc = encode_input(&mut g, &m.params, input, None).unwrap();
        let mut st = enc.initial_state(&mut g, 5);
        let mut ids = Vec::new();
        for _ in 0..6 {
            let step = decode_step(&mut g, &m.params, &st, &enc.memory, None).unwrap();
            let p = g.softmax(step.logits).unwrap();
            let probs = g.value(p).data();
            let w = (0..probs.len())
                .filter(|&w| w != PAD_ID && w != BOS_ID)
                .max_by(|&a, &b| probs[a].total_cmp(&probs[b]).then(b.cmp(&a)))
                .unwrap();
            if w == EOS_ID {
                break;
            }
            ids.push(w);
            st = step.next_state(w);
        }
        assert_eq!(out.ids, ids);
        assert_eq!(out.attention.len(), out.ids.len());
        for row in &out.attention {
            assert_eq!(row.len(), input.ast.len());
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn beam_of_one_equals_greedy() {
        for seed in 0..8 {
            let (mut m, prepared) = tiny_model(EncoderKind::Sequence, 1, 4);
            random_store_values(&mut m.store, &mut ChaCha8Rng::seed_from_u64(seed), 1.5);
            let input = &prepared[1].input;
            let greedy = m.greedy(input, 5).unwrap();
            let b1 = m.beam_search(input, 1, 5).unwrap();
            assert_eq!(greedy.ids, b1.ids);
            assert_eq!(greedy.attention, b1.attention);
            let b4 = m.beam_search(input, 4, 5).unwrap();
            assert_eq!(b4.attention.len(), b4.ids.len());
            assert_eq!(b4.positions.len(), input.source.len());
        }
    }
}
