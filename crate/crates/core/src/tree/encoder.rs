use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::cells::{child_sum_step, multiway_step, nary_step, ChildSumParams, MultiwayParams, NaryParams};
use crate::ast::{binarize, linearize, Ast, LinearToken};
use crate::autodiff::{Graph, NodeId, ParamStore, TensorError};
use crate::lstm::{lstm_step, CellError, LstmParams, LstmState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    ChildSum,
    NAry,
    MultiWay,
    /// Chain LSTM over the bracketed linearization.
    Sequence,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 4] = [
        EncoderKind::ChildSum,
        EncoderKind::NAry,
        EncoderKind::MultiWay,
        EncoderKind::Sequence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderKind::ChildSum => "child_sum",
            EncoderKind::NAry => "n_ary",
            EncoderKind::MultiWay => "multi_way",
            EncoderKind::Sequence => "sequence",
        }
    }

    pub fn is_tree(self) -> bool {
        self != EncoderKind::Sequence
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EncoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown encoder {s:?} (expected child_sum, n_ary, multi_way or sequence)"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LayerParams {
    ChildSum(ChildSumParams),
    NAry(NaryParams),
    MultiWay(MultiwayParams),
    Sequence(LstmParams),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub kind: EncoderKind,
    pub layers: Vec<LayerParams>,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl EncoderParams {
    /// Layer `l` is registered under `{prefix}.layer{l}.{cell}`; layers after
    /// the first read `hidden_dim` inputs.
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        kind: EncoderKind,
        num_layers: usize,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Result<Self, TensorError> {
        let mut layers = Vec::with_capacity(num_layers);
        for l in 0..num_layers {
            let d_in = if l == 0 { input_dim } else { hidden_dim };
            let base = format!("{prefix}.layer{l}");
            layers.push(match kind {
                EncoderKind::ChildSum => LayerParams::ChildSum(ChildSumParams::init(
                    store,
                    &format!("{base}.child_sum"),
                    d_in,
                    hidden_dim,
                    rng,
                )?),
                EncoderKind::NAry => {
                    LayerParams::NAry(NaryParams::init(store, &format!("{base}.nary"), 2, d_in, hidden_dim, rng)?)
                }
                EncoderKind::MultiWay => LayerParams::MultiWay(MultiwayParams::init(
                    store,
                    &format!("{base}.multiway"),
                    d_in,
                    hidden_dim,
                    rng,
                )?),
                EncoderKind::Sequence => {
                    LayerParams::Sequence(LstmParams::init(store, &format!("{base}.lstm"), d_in, hidden_dim, rng)?)
                }
            });
        }
        Ok(Self {
            kind,
            layers,
            input_dim,
            hidden_dim,
        })
    }
}

/// Encoder state at one source position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeState {
    /// AST node this position describes.
    pub node: usize,
    pub h: NodeId,
    pub c: NodeId,
}

/// Inverted dropout: kept units are scaled by `1 / (1 - p)`.
pub struct Dropout<'a> {
    pub p: f64,
    pub rng: &'a mut dyn RngCore,
}

impl Dropout<'_> {
    pub(crate) fn apply(&mut self, g: &mut Graph<'_>, x: NodeId) -> Result<NodeId, TensorError> {
        if self.p <= 0.0 {
            return Ok(x);
        }
        let keep = 1.0 - self.p;
        let mask: Vec<f64> = (0..g.value(x).len())
            .map(|_| if self.rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        g.dropout(x, mask)
    }
}

#[derive(Clone, Debug)]
pub struct EncodedSource {
    /// Raw cell states per layer, one per source position.
    pub layers: Vec<Vec<NodeState>>,
    /// Top-layer outputs (after any shortcut), the attention memory.
    pub memory: Vec<NodeId>,
    /// AST node of each source position.
    pub positions: Vec<usize>,
    /// Per-layer state handed to the decoder: the root's for trees, the last
    /// position's for the sequence encoder.
    pub final_states: Vec<LstmState>,
    /// Number of cell evaluations performed.
    pub cell_calls: usize,
}

/// Source positions for `kind`: tree nodes in index order, or the tokens of
/// the linearization. Each entry is `(symbol, node)`; bracket tokens refer to
/// the node they open or close.
pub fn source_tokens(ast: &Ast, kind: EncoderKind) -> Vec<(String, usize)> {
    if kind.is_tree() {
        return (0..ast.len()).map(|i| (ast.label(i).to_string(), i)).collect();
    }
    let toks = linearize(ast);
    let mut out = Vec::with_capacity(toks.len());
    let mut open: Vec<usize> = Vec::new();
    for (k, t) in toks.iter().enumerate() {
        let node = match t {
            LinearToken::Open => match toks.get(k + 1) {
                Some(LinearToken::Label { node, .. }) => {
                    open.push(*node);
                    *node
                }
                _ => unreachable!("linearize emits a label after every '('"),
            },
            LinearToken::Label { node, .. } => *node,
            LinearToken::Close => open.pop().expect("balanced linearization"),
        };
        out.push((t.text().to_string(), node));
    }
    out
}

/// Runs every layer bottom-up over the tree (or left to right over the
/// linearization). `inputs` holds one embedding per source position as given
/// by [`source_tokens`].
///
/// Layers after the first read the previous layer's outputs; with `shortcut`
/// their output is `h + input`. The raw `h` drives the recurrence within a
/// layer. Dropout, when given, is applied to every layer input.
pub fn encode(
    g: &mut Graph<'_>,
    ast: &Ast,
    inputs: &[NodeId],
    params: &EncoderParams,
    mut dropout: Option<&mut Dropout<'_>>,
    shortcut: bool,
) -> Result<EncodedSource, CellError> {
    let positions: Vec<usize> = source_tokens(ast, params.kind).into_iter().map(|(_, n)| n).collect();
    if inputs.len() != positions.len() {
        return Err(CellError::Dimension {
            what: "encoder inputs",
            expected: positions.len(),
            got: inputs.len(),
        });
    }
    let n = positions.len();
    let binary = (params.kind == EncoderKind::NAry).then(|| binarize(ast));
    let mut layer_in: Vec<NodeId> = inputs.to_vec();
    let mut layers = Vec::with_capacity(params.layers.len());
    let mut final_states = Vec::with_capacity(params.layers.len());
    let mut cell_calls = 0;

    for (l, lp) in params.layers.iter().enumerate() {
        let mut xs = Vec::with_capacity(n);
        for &x in &layer_in {
            xs.push(match dropout.as_deref_mut() {
                Some(d) => d.apply(g, x)?,
                None => x,
            });
        }
        let mut states: Vec<Option<LstmState>> = vec![None; n];
        match lp {
            LayerParams::Sequence(p) => {
                let mut prev = None;
                for k in 0..n {
                    let s = lstm_step(g, xs[k], prev, p)?;
                    states[k] = Some(s);
                    prev = Some(s);
                    cell_calls += 1;
                }
            }
            _ => {
                // Children (and binary slots) always follow their parent in
                // pre-order, so descending index order is bottom-up.
                for i in (0..n).rev() {
                    let s = match lp {
                        LayerParams::ChildSum(p) => {
                            let kids: Vec<LstmState> =
                                ast.children(i).iter().map(|&c| states[c].expect("child first")).collect();
                            child_sum_step(g, xs[i], &kids, p)?
                        }
                        LayerParams::MultiWay(p) => {
                            let kids: Vec<LstmState> =
                                ast.children(i).iter().map(|&c| states[c].expect("child first")).collect();
                            multiway_step(g, xs[i], &kids, p)?
                        }
                        LayerParams::NAry(p) => {
                            let bin = binary.as_ref().expect("binarized for n-ary");
                            let slots = bin.slots(i).map(|s| s.map(|c| states[c].expect("slot first")));
                            nary_step(g, xs[i], &slots, p)?
                        }
                        LayerParams::Sequence(_) => unreachable!(),
                    };
                    states[i] = Some(s);
                    cell_calls += 1;
                }
            }
        }
        let states: Vec<LstmState> = states.into_iter().map(|s| s.expect("every position encoded")).collect();
        let mut outputs = Vec::with_capacity(n);
        for (k, s) in states.iter().enumerate() {
            outputs.push(if shortcut && l > 0 { g.add(s.h, layer_in[k])? } else { s.h });
        }
        final_states.push(if params.kind.is_tree() { states[0] } else { states[n - 1] });
        layers.push(
            states
                .iter()
                .zip(&positions)
                .map(|(s, &node)| NodeState { node, h: s.h, c: s.c })
                .collect(),
        );
        layer_in = outputs;
    }
    Ok(EncodedSource {
        layers,
        memory: layer_in,
        positions,
        final_states,
        cell_calls,
    })
}
