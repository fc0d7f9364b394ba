//! Additive attention: `score(h_d, h_e) = vᵀ tanh(W [h_d; h_e])`.
//!
//! `W` is stored as its two column blocks `W_d` and `W_e`, so the encoder-side
//! products `W_e h_e` are computed once per source.

use rand::Rng;

use super::ModelError;
use crate::autodiff::{glorot_uniform, Graph, NodeId, ParamId, ParamStore, TensorError};

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    pub wd: ParamId,
    pub we: ParamId,
    /// Stored as a `1 × dim` matrix.
    pub v: ParamId,
    pub dim: usize,
}

impl AttentionParams {
    pub fn init<R: Rng>(store: &mut ParamStore, prefix: &str, dim: usize, rng: &mut R) -> Result<Self, TensorError> {
        Ok(Self {
            wd: store.add(format!("{prefix}.Wd"), glorot_uniform(rng, dim, dim))?,
            we: store.add(format!("{prefix}.We"), glorot_uniform(rng, dim, dim))?,
            v: store.add(format!("{prefix}.v"), glorot_uniform(rng, 1, dim))?,
            dim,
        })
    }
}

/// Encoder states prepared for attention.
#[derive(Clone, Debug)]
pub struct Memory {
    pub states: Vec<NodeId>,
    /// `W_e h_e` per state.
    pub keys: Vec<NodeId>,
    /// States stacked as an `n × dim` matrix.
    pub matrix: NodeId,
}

impl Memory {
    pub fn new(g: &mut Graph<'_>, states: &[NodeId], p: &AttentionParams) -> Result<Self, ModelError> {
        if states.is_empty() {
            return Err(ModelError::EmptyMemory);
        }
        let we = g.param(p.we);
        let keys = states.iter().map(|&h| g.matvec(we, h)).collect::<Result<Vec<_>, _>>()?;
        let matrix = g.stack_rows(states)?;
        Ok(Self {
            states: states.to_vec(),
            keys,
            matrix,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Softmax over the scores of every memory entry against `h_dec`.
pub fn attention_weights(
    g: &mut Graph<'_>,
    h_dec: NodeId,
    memory: &Memory,
    p: &AttentionParams,
) -> Result<NodeId, ModelError> {
    if memory.is_empty() {
        return Err(ModelError::EmptyMemory);
    }
    let wd = g.param(p.wd);
    let v = g.param(p.v);
    let q = g.matvec(wd, h_dec)?;
    let mut scores = Vec::with_capacity(memory.len());
    for &k in &memory.keys {
        let s = g.add(q, k)?;
        let s = g.tanh(s)?;
        scores.push(g.matvec(v, s)?);
    }
    let scores = g.concat(&scores)?;
    Ok(g.softmax(scores)?)
}

/// `Σ_j α_j h_j`.
pub fn context_vector(g: &mut Graph<'_>, alpha: NodeId, memory: &Memory) -> Result<NodeId, ModelError> {
    let n = g.value(alpha).len();
    if n != memory.len() {
        return Err(ModelError::LengthMismatch {
            what: "attention weights",
            expected: memory.len(),
            got: n,
        });
    }
    Ok(g.mat_t_vec(memory.matrix, alpha)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use crate::testutil::{mat, oracle, rvec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(d: usize, seed: u64) -> (ParamStore, AttentionParams, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let p = AttentionParams::init(&mut store, "attention", d, &mut rng).unwrap();
        (store, p, rng)
    }

    #[test]
    fn identical_states_get_equal_weight_and_single_state_gets_one() {
        let (store, p, mut rng) = setup(3, 1);
        let mut g = Graph::new(&store);
        let s = rvec(&mut rng, 3);
        let h = g.input(Tensor::vector(rvec(&mut rng, 3))).unwrap();
        let a = g.input(Tensor::vector(s.clone())).unwrap();
        let b = g.input(Tensor::vector(s)).unwrap();
        let m = Memory::new(&mut g, &[a, b], &p).unwrap();
        let alpha = attention_weights(&mut g, h, &m, &p).unwrap();
        assert_eq!(g.value(alpha).data(), &[0.5, 0.5]);
        let m1 = Memory::new(&mut g, &[a], &p).unwrap();
        let alpha = attention_weights(&mut g, h, &m1, &p).unwrap();
        assert_eq!(g.value(alpha).data(), &[1.0]);
        assert!(matches!(Memory::new(&mut g, &[], &p), Err(ModelError::EmptyMemory)));
    }

    #[test]
    fn one_hot_and_uniform_contexts() {
        let (store, p, mut rng) = setup(3, 2);
        let mut g = Graph::new(&store);
        let vals: Vec<Vec<f64>> = (0..3).map(|_| rvec(&mut rng, 3)).collect();
        let states: Vec<NodeId> = vals.iter().map(|v| g.input(Tensor::vector(v.clone())).unwrap()).collect();
        let m = Memory::new(&mut g, &states, &p).unwrap();
        let one_hot = g.input(Tensor::vector(vec![0.0, 1.0, 0.0])).unwrap();
        let v = context_vector(&mut g, one_hot, &m).unwrap();
        assert_eq!(g.value(v).data(), vals[1].as_slice());
        let short = g.input(Tensor::vector(vec![1.0])).unwrap();
        assert!(context_vector(&mut g, short, &m).is_err());

        let same: Vec<NodeId> = (0..4).map(|_| g.input(Tensor::vector(vals[0].clone())).unwrap()).collect();
        let m = Memory::new(&mut g, &same, &p).unwrap();
        let u = g.input(Tensor::vector(vec![0.25; 4])).unwrap();
        let v = context_vector(&mut g, u, &m).unwrap();
        for (a, b) in g.value(v).data().iter().zip(&vals[0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    /// The unsplit `W = [W_d W_e]`.
    fn joined(store: &ParamStore, p: &AttentionParams) -> oracle::Mat {
        let (a, b) = (mat(store, p.wd), mat(store, p.we));
        let mut data = Vec::new();
        for r in 0..a.rows {
            data.extend_from_slice(&a.data[r * a.cols..(r + 1) * a.cols]);
            data.extend_from_slice(&b.data[r * b.cols..(r + 1) * b.cols]);
        }
        oracle::Mat {
            rows: a.rows,
            cols: a.cols + b.cols,
            data,
        }
    }

    #[test]
    fn matches_scalar_oracle_and_is_a_distribution() {
        for seed in 0..100 {
            let d = 2 + (seed as usize % 4);
            let (store, p, mut rng) = setup(d, 100 + seed);
            let n = 1 + (seed as usize % 6);
            let hd = rvec(&mut rng, d);
            let hs: Vec<Vec<f64>> = (0..n).map(|_| rvec(&mut rng, d)).collect();
            let mut g = Graph::new(&store);
            let hdn = g.input(Tensor::vector(hd.clone())).unwrap();
            let states: Vec<NodeId> = hs.iter().map(|v| g.input(Tensor::vector(v.clone())).unwrap()).collect();
            let m = Memory::new(&mut g, &states, &p).unwrap();
            let alpha = attention_weights(&mut g, hdn, &m, &p).unwrap();
            let ctx = context_vector(&mut g, alpha, &m).unwrap();

            let want_alpha = oracle::attention(&joined(&store, &p), store.get(p.v).data(), &hd, &hs);
            let want_ctx = oracle::weighted_sum(&want_alpha, &hs);
            let got = g.value(alpha).data();
            let total: f64 = got.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(got.iter().all(|&a| a > 0.0));
            for (a, b) in got.iter().zip(&want_alpha) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in g.value(ctx).data().iter().zip(&want_ctx) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
