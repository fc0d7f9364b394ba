use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::attention::{attention_weights, context_vector, AttentionParams, Memory};
use super::{ModelConfig, ModelError};
use crate::ast::{linearize, normalize_labels, Ast, LinearToken};
use crate::autodiff::{filled, glorot_uniform, Graph, NodeId, ParamId, ParamStore};
use crate::corpus::{Sample, Vocab, VocabSide, BOS_ID, CLOSE, EOS_ID, OPEN};
use crate::lstm::{lstm_step, LstmParams, LstmState};
use crate::metrics::SampleStats;
use crate::tree::{encode, Dropout, EncodedSource, EncoderParams};

/// Parameter handles of the full encoder-decoder.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub source_embedding: ParamId,
    pub target_embedding: ParamId,
    pub encoder: EncoderParams,
    /// Layer 0 reads `[embed(y); v]`, later layers the previous layer output.
    pub decoder: Vec<LstmParams>,
    pub attention: AttentionParams,
    pub projection_w: ParamId,
    pub projection_b: ParamId,
    pub dim: usize,
}

impl ModelParams {
    /// Registers every parameter in a fixed order under stable dotted names.
    pub fn init(
        store: &mut ParamStore,
        config: &ModelConfig,
        ast_vocab: usize,
        comment_vocab: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, ModelError> {
        let d = config.dim;
        let source_embedding = store.add("embedding.source", glorot_uniform(rng, ast_vocab, d))?;
        let target_embedding = store.add("embedding.target", glorot_uniform(rng, comment_vocab, d))?;
        let encoder = EncoderParams::init(store, "encoder", config.encoder, config.layers, d, d, rng)?;
        let decoder = (0..config.layers)
            .map(|l| {
                let d_in = if l == 0 { 2 * d } else { d };
                LstmParams::init(store, &format!("decoder.layer{l}.lstm"), d_in, d, rng)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let attention = AttentionParams::init(store, "attention", d, rng)?;
        let projection_w = store.add("projection.W", glorot_uniform(rng, comment_vocab, d))?;
        let projection_b = store.add("projection.b", filled(comment_vocab, 0.0))?;
        Ok(Self {
            source_embedding,
            target_embedding,
            encoder,
            decoder,
            attention,
            projection_w,
            projection_b,
            dim: d,
        })
    }
}

/// A tree with its labels mapped into the AST vocabulary, plus the id of
/// every encoder input position.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedSource {
    pub ast: Ast,
    pub source: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreparedSample {
    pub id: String,
    pub input: PreparedSource,
    /// Comment ids followed by EOS.
    pub target: Vec<usize>,
    /// Comment tokens as they appear in the corpus.
    pub reference: Vec<String>,
    pub stats: SampleStats,
}

/// Decoder state before a step: per-layer LSTM states, the previous word and
/// the previous context vector.
#[derive(Clone, Debug)]
pub struct DecoderState {
    pub layers: Vec<LstmState>,
    pub prev_word: usize,
    pub context: NodeId,
}

/// Result of one decoder step.
#[derive(Clone, Debug)]
pub struct Step {
    /// Unnormalized scores over the comment vocabulary.
    pub logits: NodeId,
    /// Attention weights over the memory.
    pub alpha: NodeId,
    pub layers: Vec<LstmState>,
    pub context: NodeId,
}

impl Step {
    /// The state for the next step after emitting `word`.
    pub fn next_state(&self, word: usize) -> DecoderState {
        DecoderState {
            layers: self.layers.clone(),
            prev_word: word,
            context: self.context,
        }
    }
}

/// Encoder output ready for decoding.
#[derive(Clone, Debug)]
pub struct EncodedInput {
    pub encoded: EncodedSource,
    pub memory: Memory,
}

impl EncodedInput {
    /// Decoder start: the encoder's final per-layer states, a zero context
    /// and BOS.
    pub fn initial_state(&self, g: &mut Graph<'_>, dim: usize) -> DecoderState {
        DecoderState {
            layers: self.encoded.final_states.clone(),
            prev_word: BOS_ID,
            context: g.zeros(dim),
        }
    }
}

fn maybe_drop(g: &mut Graph<'_>, x: NodeId, dropout: &mut Option<&mut Dropout<'_>>) -> Result<NodeId, ModelError> {
    Ok(match dropout.as_deref_mut() {
        Some(d) => d.apply(g, x)?,
        None => x,
    })
}

/// Embeds and encodes a prepared source, building the attention memory from
/// the top encoder layer.
pub fn encode_input(
    g: &mut Graph<'_>,
    p: &ModelParams,
    input: &PreparedSource,
    mut dropout: Option<&mut Dropout<'_>>,
) -> Result<EncodedInput, ModelError> {
    let table = g.param(p.source_embedding);
    let xs = input
        .source
        .iter()
        .map(|&id| g.embedding(table, id))
        .collect::<Result<Vec<_>, _>>()?;
    let encoded = encode(g, &input.ast, &xs, &p.encoder, dropout.as_deref_mut(), true)?;
    let memory = Memory::new(g, &encoded.memory, &p.attention)?;
    Ok(EncodedInput { encoded, memory })
}

/// One decoder step: LSTM layers over `[embed(y_{t-1}); v_{t-1}]`, attention
/// from the top output, and the output projection.
pub fn decode_step(
    g: &mut Graph<'_>,
    p: &ModelParams,
    state: &DecoderState,
    memory: &Memory,
    mut dropout: Option<&mut Dropout<'_>>,
) -> Result<Step, ModelError> {
    let table = g.param(p.target_embedding);
    let emb = g.embedding(table, state.prev_word)?;
    let mut input = g.concat(&[emb, state.context])?;
    let mut layers = Vec::with_capacity(p.decoder.len());
    for (l, lp) in p.decoder.iter().enumerate() {
        let x = maybe_drop(g, input, &mut dropout)?;
        let s = lstm_step(g, x, Some(state.layers[l]), lp)?;
        layers.push(s);
        input = if l > 0 { g.add(s.h, input)? } else { s.h };
    }
    let top = input;
    let alpha = attention_weights(g, top, memory, &p.attention)?;
    let context = context_vector(g, alpha, memory)?;
    let w = g.param(p.projection_w);
    let b = g.param(p.projection_b);
    let wh = g.matvec(w, top)?;
    let logits = g.add(wh, b)?;
    Ok(Step {
        logits,
        alpha,
        layers,
        context,
    })
}

/// Teacher-forced sum of token cross-entropies for one sample.
pub fn sample_loss(
    g: &mut Graph<'_>,
    p: &ModelParams,
    sample: &PreparedSample,
    mut dropout: Option<&mut Dropout<'_>>,
) -> Result<NodeId, ModelError> {
    let enc = encode_input(g, p, &sample.input, dropout.as_deref_mut())?;
    let mut state = enc.initial_state(g, p.dim);
    let mut terms = Vec::with_capacity(sample.target.len());
    for &y in &sample.target {
        let step = decode_step(g, p, &state, &enc.memory, dropout.as_deref_mut())?;
        terms.push(g.cross_entropy(step.logits, y)?);
        state = step.next_state(y);
    }
    Ok(g.sum(&terms)?)
}

/// Total target tokens of a batch, EOS included.
pub fn token_count(batch: &[&PreparedSample]) -> usize {
    batch.iter().map(|s| s.target.len()).sum()
}

/// Batch loss in one graph: summed token losses over the batch token count.
pub fn batch_loss(
    g: &mut Graph<'_>,
    p: &ModelParams,
    batch: &[&PreparedSample],
    mut dropout: Option<&mut Dropout<'_>>,
) -> Result<NodeId, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let losses = batch
        .iter()
        .map(|s| sample_loss(g, p, s, dropout.as_deref_mut()))
        .collect::<Result<Vec<_>, _>>()?;
    let total = g.sum(&losses)?;
    Ok(g.scale(total, 1.0 / token_count(batch) as f64)?)
}

/// A configured model with its vocabularies and parameter values.
#[derive(Clone, Debug)]
pub struct Summarizer {
    pub config: ModelConfig,
    pub ast_vocab: Vocab,
    pub comment_vocab: Vocab,
    pub store: ParamStore,
    pub params: ModelParams,
}

impl Summarizer {
    /// Fresh parameters drawn from a generator seeded with `config.seed`.
    pub fn new(config: ModelConfig, ast_vocab: Vocab, comment_vocab: Vocab) -> Result<Self, ModelError> {
        config.validate()?;
        if ast_vocab.side() != VocabSide::Ast || comment_vocab.side() != VocabSide::Comment {
            return Err(ModelError::Config("vocabularies passed in the wrong order".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let params = ModelParams::init(&mut store, &config, ast_vocab.len(), comment_vocab.len(), &mut rng)?;
        Ok(Self {
            config,
            ast_vocab,
            comment_vocab,
            store,
            params,
        })
    }

    /// Normalizes labels and lists the encoder input ids: one per node for
    /// tree encoders, one per traversal token for the sequence encoder.
    pub fn prepare_source(&self, ast: &Ast) -> PreparedSource {
        let indexed = normalize_labels(ast, &self.ast_vocab);
        let source = if self.config.encoder.is_tree() {
            indexed.ids.clone()
        } else {
            let open = self.ast_vocab.id(OPEN).expect("AST vocab has brackets");
            let close = self.ast_vocab.id(CLOSE).expect("AST vocab has brackets");
            linearize(&indexed.ast)
                .iter()
                .map(|t| match t {
                    LinearToken::Open => open,
                    LinearToken::Close => close,
                    LinearToken::Label { node, .. } => indexed.ids[*node],
                })
                .collect()
        };
        PreparedSource {
            ast: indexed.ast,
            source,
        }
    }

    pub fn prepare(&self, sample: &Sample) -> PreparedSample {
        let mut target: Vec<usize> = sample.comment.iter().map(|w| self.comment_vocab.encode_word(w)).collect();
        target.push(EOS_ID);
        PreparedSample {
            id: sample.id.clone(),
            input: self.prepare_source(&sample.ast),
            target,
            reference: sample.comment.clone(),
            stats: SampleStats {
                comment_len: sample.comment.len(),
                node_count: sample.stats.node_count,
                max_degree: sample.stats.max_degree,
            },
        }
    }

    pub fn prepare_all(&self, samples: &[Sample]) -> Vec<PreparedSample> {
        samples.iter().map(|s| self.prepare(s)).collect()
    }

    /// Dropout-free mean token loss of a batch.
    pub fn loss(&self, batch: &[&PreparedSample]) -> Result<f64, ModelError> {
        let mut g = Graph::new(&self.store);
        let l = batch_loss(&mut g, &self.params, batch, None)?;
        Ok(g.value(l).data()[0])
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::ast::{parse_mini_source, NodeKind};
    use crate::autodiff::{grad_check, Tensor};
    use crate::corpus::{build_vocab, VocabLimits};
    use crate::testutil::{gates, mat, oracle, random_store_values, rvec};
    use crate::tree::EncoderKind;

    pub(crate) fn tiny_samples() -> Vec<Sample> {
        let src = [
            ("fn isEmpty(s) { return len(s) == 0; }", "checks whether s is empty"),
            ("fn add(a, b) { return a + b; }", "adds two numbers"),
        ];
        src.iter()
            .enumerate()
            .map(|(i, (code, c))| {
                Sample::new(
                    format!("s{i}"),
                    parse_mini_source(code).unwrap(),
                    c.split(' ').map(str::to_string).collect(),
                )
            })
            .collect()
    }

    pub(crate) fn tiny_model(kind: EncoderKind, layers: usize, dim: usize) -> (Summarizer, Vec<PreparedSample>) {
        let samples = tiny_samples();
        let (av, cv) = build_vocab(&samples, VocabLimits::default()).unwrap();
        let config = ModelConfig {
            encoder: kind,
            layers,
            dim,
            dropout: 0.0,
            ..ModelConfig::default()
        };
        let m = Summarizer::new(config, av, cv).unwrap();
        let prepared = m.prepare_all(&samples);
        (m, prepared)
    }

    #[test]
    fn parameter_layout_names() {
        let (m, _) = tiny_model(EncoderKind::MultiWay, 2, 4);
        for name in [
            "embedding.source",
            "embedding.target",
            "encoder.layer0.multiway.Lf.fwd.Wf",
            "encoder.layer1.multiway.Wo",
            "decoder.layer0.lstm.Wf",
            "decoder.layer1.lstm.Uo",
            "attention.Wd",
            "attention.We",
            "attention.v",
            "projection.W",
            "projection.b",
        ] {
            assert!(m.store.id(name).is_some(), "{name}");
        }
        let w0 = m.store.get(m.store.id("decoder.layer0.lstm.Wf").unwrap());
        assert_eq!(w0.shape(), &[4, 8]);
    }

    #[test]
    fn sequence_source_is_the_bracketed_traversal() {
        let (m, prepared) = tiny_model(EncoderKind::Sequence, 1, 4);
        let s = &prepared[0];
        let toks = linearize(&s.input.ast);
        assert_eq!(s.input.source.len(), toks.len());
        let text: Vec<&str> = s.input.source.iter().map(|&i| m.ast_vocab.symbol(i)).collect();
        let want: Vec<&str> = toks.iter().map(|t| t.text()).collect();
        assert_eq!(text, want);
        let (mt, pt) = tiny_model(EncoderKind::ChildSum, 1, 4);
        assert_eq!(pt[0].input.source.len(), pt[0].input.ast.len());
        assert_eq!(mt.comment_vocab.symbol(*pt[0].target.last().unwrap()), crate::corpus::EOS);
    }

    #[test]
    fn zero_parameters_give_uniform_distribution_and_ln_v_loss() {
        let (mut m, prepared) = tiny_model(EncoderKind::MultiWay, 2, 4);
        m.store.set_all(0.0);
        let v = m.comment_vocab.len();
        let mut g = Graph::new(&m.store);
        let enc = encode_input(&mut g, &m.params, &prepared[0].input, None).unwrap();
        let st = enc.initial_state(&mut g, 4);
        let step = decode_step(&mut g, &m.params, &st, &enc.memory, None).unwrap();
        let p = g.softmax(step.logits).unwrap();
        for &x in g.value(p).data() {
            assert!((x - 1.0 / v as f64).abs() < 1e-15);
        }
        let only_eos = PreparedSample {
            target: vec![EOS_ID],
            ..prepared[0].clone()
        };
        let l = m.loss(&[&only_eos]).unwrap();
        assert!((l - (v as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn distribution_sums_to_one_under_random_parameters() {
        let (mut m, prepared) = tiny_model(EncoderKind::NAry, 2, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        random_store_values(&mut m.store, &mut rng, 1.0);
        let mut g = Graph::new(&m.store);
        let enc = encode_input(&mut g, &m.params, &prepared[1].input, None).unwrap();
        let mut st = enc.initial_state(&mut g, 5);
        for _ in 0..4 {
            let step = decode_step(&mut g, &m.params, &st, &enc.memory, None).unwrap();
            let p = g.softmax(step.logits).unwrap();
            let s: f64 = g.value(p).data().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert_eq!(g.value(step.alpha).len(), prepared[1].input.ast.len());
            st = step.next_state(3);
        }
    }

    /// Second step of a 1-layer decoder against straight-line arithmetic,
    /// starting from an arbitrary state and memory.
    #[test]
    fn decode_step_matches_scalar_composition() {
        let (mut m, _) = tiny_model(EncoderKind::ChildSum, 1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        random_store_values(&mut m.store, &mut rng, 0.8);
        let d = 3;
        let (h0, c0, v0) = (rvec(&mut rng, d), rvec(&mut rng, d), rvec(&mut rng, d));
        let mem: Vec<Vec<f64>> = (0..4).map(|_| rvec(&mut rng, d)).collect();
        let word = 5;

        let p = &m.params;
        let mut g = Graph::new(&m.store);
        let states: Vec<NodeId> = mem.iter().map(|v| g.input(Tensor::vector(v.clone())).unwrap()).collect();
        let memory = Memory::new(&mut g, &states, &p.attention).unwrap();
        let st = DecoderState {
            layers: vec![LstmState {
                h: g.input(Tensor::vector(h0.clone())).unwrap(),
                c: g.input(Tensor::vector(c0.clone())).unwrap(),
            }],
            prev_word: word,
            context: g.input(Tensor::vector(v0.clone())).unwrap(),
        };
        let step = decode_step(&mut g, p, &st, &memory, None).unwrap();

        let emb = m.store.get(p.target_embedding).data()[word * d..(word + 1) * d].to_vec();
        let x: Vec<f64> = emb.into_iter().chain(v0).collect();
        let (h, _c) = oracle::lstm_step(&gates(&m.store, &p.decoder[0]), &x, &h0, &c0);
        let wd = mat(&m.store, p.attention.wd);
        let we = mat(&m.store, p.attention.we);
        let va = m.store.get(p.attention.v).data();
        let scores: Vec<f64> = mem
            .iter()
            .map(|he| {
                let (a, b) = (wd.mv(&h), we.mv(he));
                (0..d).map(|k| va[k] * (a[k] + b[k]).tanh()).sum()
            })
            .collect();
        let alpha = oracle::softmax(&scores);
        let ctx = oracle::weighted_sum(&alpha, &mem);
        let wp = mat(&m.store, p.projection_w);
        let bp = m.store.get(p.projection_b).data();
        let logits: Vec<f64> = wp.mv(&h).iter().zip(bp).map(|(a, b)| a + b).collect();

        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
        assert!(close(g.value(step.alpha).data(), &alpha));
        assert!(close(g.value(step.context).data(), &ctx));
        assert!(close(g.value(step.logits).data(), &logits));
    }

    #[test]
    fn loss_matches_scalar_cross_entropy() {
        let (mut m, prepared) = tiny_model(EncoderKind::Sequence, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        random_store_values(&mut m.store, &mut rng, 0.5);
        let mut g = Graph::new(&m.store);
        let s = &prepared[0];
        let enc = encode_input(&mut g, &m.params, &s.input, None).unwrap();
        let mut st = enc.initial_state(&mut g, 3);
        let mut want = 0.0;
        for &y in &s.target {
            let step = decode_step(&mut g, &m.params, &st, &enc.memory, None).unwrap();
            let probs = oracle::softmax(g.value(step.logits).data());
            want -= probs[y].ln();
            st = step.next_state(y);
        }
        let n = s.target.len() as f64;
        let got = m.loss(&[s]).unwrap();
        assert!((got - want / n).abs() < 1e-12, "{got} vs {}", want / n);
    }

    #[test]
    fn full_model_gradient_check_small() {
        for kind in EncoderKind::ALL {
            let (m, prepared) = tiny_model(kind, 2, 3);
            let batch: Vec<&PreparedSample> = prepared.iter().collect();
            let ids: Vec<ParamId> = m.store.ids().collect();
            let report = grad_check(&m.store, &ids, 1e-3, |g| {
                batch_loss(g, &m.params, &batch, None).map_err(|e| e.as_tensor_error().cloned().expect("tensor error"))
            })
            .unwrap();
            assert!(report.max_rel_error < 1e-4, "{kind}: {report:?}");
        }
    }

    #[test]
    fn unknown_leaves_are_normalized() {
        let (m, _) = tiny_model(EncoderKind::ChildSum, 1, 2);
        let ast = Ast::syntax("Call", vec![Ast::leaf("neverSeen", NodeKind::Identifier)]);
        let p = m.prepare_source(&ast);
        assert_eq!(p.ast.label(1), crate::corpus::UNK_ID);
    }
}
