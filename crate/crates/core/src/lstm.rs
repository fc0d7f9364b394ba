//! Chain LSTM cells and the bidirectional wrapper.
//!
//! Gate equations, for gate parameters `W`, `U`, `b`:
//!
//! ```text
//! f = σ(W_f x + U_f h' + b_f)     u = tanh(W_u x + U_u h' + b_u)
//! i = σ(W_i x + U_i h' + b_i)     o = σ(W_o x + U_o h' + b_o)
//! c = c' ⊙ f + i ⊙ u              h = o ⊙ tanh(c)
//! ```
//!
//! A missing previous state means the zero state; the corresponding terms are
//! skipped rather than multiplied by zero, which yields identical values.

use rand::Rng;
use thiserror::Error;

use crate::autodiff::{filled, glorot_uniform, Graph, NodeId, ParamId, ParamStore, TensorError};

/// Gate order used by every parameter array in this crate.
pub const GATES: [char; 4] = ['f', 'u', 'i', 'o'];
pub(crate) const F: usize = 0;
pub(crate) const U: usize = 1;
pub(crate) const I: usize = 2;
pub(crate) const O: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CellError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("recurrent run over an empty sequence")]
    EmptySequence,
    #[error("expected exactly {expected} children, got {got}")]
    ChildCount { expected: usize, got: usize },
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

/// Parameters of one chain LSTM mapping `input_dim` inputs to `hidden_dim` states.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub w: [ParamId; 4],
    pub u: [ParamId; 4],
    pub b: [ParamId; 4],
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl LstmParams {
    /// Registers `{prefix}.W{g}`, `{prefix}.U{g}` and `{prefix}.b{g}` for each gate.
    /// The forget-gate bias starts at 1.
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Result<Self, TensorError> {
        let mut w = Vec::with_capacity(4);
        let mut u = Vec::with_capacity(4);
        let mut b = Vec::with_capacity(4);
        for (k, g) in GATES.iter().enumerate() {
            w.push(store.add(format!("{prefix}.W{g}"), glorot_uniform(rng, hidden_dim, input_dim))?);
            u.push(store.add(format!("{prefix}.U{g}"), glorot_uniform(rng, hidden_dim, hidden_dim))?);
            let bias = if k == F { 1.0 } else { 0.0 };
            b.push(store.add(format!("{prefix}.b{g}"), filled(hidden_dim, bias))?);
        }
        Ok(Self {
            w: w.try_into().expect("four gates"),
            u: u.try_into().expect("four gates"),
            b: b.try_into().expect("four gates"),
            input_dim,
            hidden_dim,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LstmState {
    pub h: NodeId,
    pub c: NodeId,
}

impl LstmState {
    pub fn zeros(g: &mut Graph<'_>, dim: usize) -> Self {
        Self {
            h: g.zeros(dim),
            c: g.zeros(dim),
        }
    }
}

/// `W x + U h + b`, with the `U h` term dropped when `h` is absent.
pub(crate) fn affine(
    g: &mut Graph<'_>,
    w: ParamId,
    x: NodeId,
    uh: Option<(ParamId, NodeId)>,
    b: ParamId,
) -> Result<NodeId, TensorError> {
    let wp = g.param(w);
    let bp = g.param(b);
    let wx = g.matvec(wp, x)?;
    let mut acc = g.add(wx, bp)?;
    if let Some((u, h)) = uh {
        let up = g.param(u);
        let uh = g.matvec(up, h)?;
        acc = g.add(acc, uh)?;
    }
    Ok(acc)
}

fn check_dim(g: &Graph<'_>, node: NodeId, expected: usize, what: &'static str) -> Result<(), CellError> {
    let got = g.value(node).len();
    if got != expected || !g.value(node).is_vector() {
        return Err(CellError::Dimension { what, expected, got });
    }
    Ok(())
}

/// One LSTM time step. `prev = None` is the zero state.
pub fn lstm_step(
    g: &mut Graph<'_>,
    x: NodeId,
    prev: Option<LstmState>,
    params: &LstmParams,
) -> Result<LstmState, CellError> {
    check_dim(g, x, params.input_dim, "lstm input")?;
    if let Some(p) = prev {
        check_dim(g, p.h, params.hidden_dim, "lstm previous h")?;
        check_dim(g, p.c, params.hidden_dim, "lstm previous c")?;
    }
    let mut pre = [x; 4];
    for k in 0..4 {
        pre[k] = affine(g, params.w[k], x, prev.map(|p| (params.u[k], p.h)), params.b[k])?;
    }
    let f = g.sigmoid(pre[F])?;
    let u = g.tanh(pre[U])?;
    let i = g.sigmoid(pre[I])?;
    let o = g.sigmoid(pre[O])?;
    let iu = g.mul(i, u)?;
    let c = match prev {
        Some(p) => {
            let cf = g.mul(p.c, f)?;
            g.add(cf, iu)?
        }
        None => iu,
    };
    let tc = g.tanh(c)?;
    let h = g.mul(o, tc)?;
    Ok(LstmState { h, c })
}

/// Left fold of [`lstm_step`] over `seq`, returning every intermediate state.
pub fn lstm_run(
    g: &mut Graph<'_>,
    seq: &[NodeId],
    params: &LstmParams,
    init: Option<LstmState>,
) -> Result<Vec<LstmState>, CellError> {
    if seq.is_empty() {
        return Err(CellError::EmptySequence);
    }
    let mut out = Vec::with_capacity(seq.len());
    let mut state = init;
    for &x in seq {
        let s = lstm_step(g, x, state, params)?;
        out.push(s);
        state = Some(s);
    }
    Ok(out)
}

/// Bidirectional run: position `i` holds `[fwd_i; bwd_{n-1-i}]`, where the
/// backward LSTM reads the sequence reversed, so both halves describe
/// element `i`.
pub fn bilstm_run(
    g: &mut Graph<'_>,
    seq: &[NodeId],
    fwd: &LstmParams,
    bwd: &LstmParams,
) -> Result<Vec<NodeId>, CellError> {
    if seq.is_empty() {
        return Err(CellError::EmptySequence);
    }
    let forward = lstm_run(g, seq, fwd, None)?;
    let reversed: Vec<NodeId> = seq.iter().rev().copied().collect();
    let backward = lstm_run(g, &reversed, bwd, None)?;
    let n = seq.len();
    (0..n)
        .map(|i| g.concat(&[forward[i].h, backward[n - 1 - i].h]).map_err(CellError::from))
        .collect()
}

/// Last position of [`bilstm_run`] without materializing the rest: the
/// forward half needs the full pass, the backward half only its first step.
pub fn bilstm_last(
    g: &mut Graph<'_>,
    seq: &[NodeId],
    fwd: &LstmParams,
    bwd: &LstmParams,
) -> Result<NodeId, CellError> {
    let Some(&last) = seq.last() else {
        return Err(CellError::EmptySequence);
    };
    let forward = lstm_run(g, seq, fwd, None)?;
    let back = lstm_step(g, last, None, bwd)?;
    let fh = forward.last().expect("nonempty").h;
    Ok(g.concat(&[fh, back.h])?)
}
