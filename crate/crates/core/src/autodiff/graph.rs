use std::fmt;

use super::{ParamId, ParamStore, Tensor, TensorError};

/// Handle to a node recorded in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Input,
    Param,
    MatVec,
    MatTVec,
    Add,
    Mul,
    Concat,
    Sum,
    Tanh,
    Sigmoid,
    Softmax,
    Embedding,
    Dropout,
    StackRows,
    CrossEntropy,
    Scale,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OpKind::Input => "input",
            OpKind::Param => "param",
            OpKind::MatVec => "matvec",
            OpKind::MatTVec => "mat_t_vec",
            OpKind::Add => "add",
            OpKind::Mul => "mul",
            OpKind::Concat => "concat",
            OpKind::Sum => "sum",
            OpKind::Tanh => "tanh",
            OpKind::Sigmoid => "sigmoid",
            OpKind::Softmax => "softmax",
            OpKind::Embedding => "embedding",
            OpKind::Dropout => "dropout",
            OpKind::StackRows => "stack_rows",
            OpKind::CrossEntropy => "cross_entropy",
            OpKind::Scale => "scale",
        };
        f.write_str(s)
    }
}

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    MatVec(NodeId, NodeId),
    MatTVec(NodeId, NodeId),
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Concat(Vec<NodeId>),
    Sum(Vec<NodeId>),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Softmax(NodeId),
    Embedding { table: NodeId, row: usize },
    Dropout { input: NodeId, mask: Vec<f64> },
    StackRows(Vec<NodeId>),
    /// Stores the softmax of the logits for the backward pass.
    CrossEntropy { logits: NodeId, target: usize, probs: Vec<f64> },
    Scale(NodeId, f64),
}

impl Op {
    fn kind(&self) -> OpKind {
        match self {
            Op::Input => OpKind::Input,
            Op::Param(_) => OpKind::Param,
            Op::MatVec(..) => OpKind::MatVec,
            Op::MatTVec(..) => OpKind::MatTVec,
            Op::Add(..) => OpKind::Add,
            Op::Mul(..) => OpKind::Mul,
            Op::Concat(_) => OpKind::Concat,
            Op::Sum(_) => OpKind::Sum,
            Op::Tanh(_) => OpKind::Tanh,
            Op::Sigmoid(_) => OpKind::Sigmoid,
            Op::Softmax(_) => OpKind::Softmax,
            Op::Embedding { .. } => OpKind::Embedding,
            Op::Dropout { .. } => OpKind::Dropout,
            Op::StackRows(_) => OpKind::StackRows,
            Op::CrossEntropy { .. } => OpKind::CrossEntropy,
            Op::Scale(..) => OpKind::Scale,
        }
    }
}

#[derive(Debug)]
struct Node {
    op: Op,
    /// `None` for parameter nodes, whose value lives in the store.
    value: Option<Tensor>,
    requires_grad: bool,
}

/// Append-only record of tensor operations supporting one reverse pass.
///
/// Parameters are borrowed from a [`ParamStore`] rather than copied, and each
/// parameter gets at most one node per graph so its gradient accumulates in
/// one place.
pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<NodeId>>,
}

/// Per-parameter gradients, indexed like the originating [`ParamStore`].
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Self {
            grads: vec![None; store.len()],
        }
    }

    /// Gradient for `id`; `None` means the parameter was unreachable (zero).
    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    /// Dense gradient for `id`, materializing zeros for unreachable parameters.
    pub fn dense(&self, id: ParamId, store: &ParamStore) -> Tensor {
        match self.get(id) {
            Some(t) => t.clone(),
            None => Tensor::zeros(store.get(id).shape()),
        }
    }

    pub fn accumulate(&mut self, other: &Gradients) {
        if self.grads.len() < other.grads.len() {
            self.grads.resize(other.grads.len(), None);
        }
        for (mine, theirs) in self.grads.iter_mut().zip(&other.grads) {
            let Some(theirs) = theirs else { continue };
            match mine {
                Some(m) => {
                    for (a, b) in m.data_mut().iter_mut().zip(theirs.data()) {
                        *a += b;
                    }
                }
                None => *mine = Some(theirs.clone()),
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.grads.iter_mut().flatten() {
            g.data_mut().iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.grads.iter().flatten().all(Tensor::all_finite)
    }
}

fn shapes(ts: &[&Tensor]) -> Vec<Vec<usize>> {
    ts.iter().map(|t| t.shape().to_vec()).collect()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in v.iter_mut() {
        *x /= total;
    }
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            param_nodes: vec![None; params.len()],
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        let node = &self.nodes[id.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(p)) => self.params.get(*p),
            (None, _) => unreachable!("only parameter nodes borrow their value"),
        }
    }

    pub fn op_kind(&self, id: NodeId) -> OpKind {
        self.nodes[id.0].op.kind()
    }

    fn push(&mut self, op: Op, value: Tensor, requires_grad: bool) -> Result<NodeId, TensorError> {
        if !value.all_finite() {
            return Err(TensorError::NonFinite { op: op.kind() });
        }
        self.nodes.push(Node {
            op,
            value: Some(value),
            requires_grad,
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    fn rg(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    /// Records a constant (non-trainable) tensor.
    pub fn input(&mut self, t: Tensor) -> Result<NodeId, TensorError> {
        self.push(Op::Input, t, false)
    }

    pub fn zeros(&mut self, n: usize) -> NodeId {
        self.input(Tensor::zeros(&[n])).expect("zeros are finite")
    }

    /// Node for a stored parameter; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> NodeId {
        if let Some(n) = self.param_nodes[id.0] {
            return n;
        }
        self.nodes.push(Node {
            op: Op::Param(id),
            value: None,
            requires_grad: true,
        });
        let n = NodeId(self.nodes.len() - 1);
        self.param_nodes[id.0] = Some(n);
        n
    }

    pub fn matvec(&mut self, m: NodeId, x: NodeId) -> Result<NodeId, TensorError> {
        let (mt, xt) = (self.value(m), self.value(x));
        if !mt.is_matrix() || !xt.is_vector() || mt.shape()[1] != xt.len() {
            return Err(TensorError::ShapeMismatch {
                op: OpKind::MatVec,
                shapes: shapes(&[mt, xt]),
            });
        }
        let (rows, cols) = (mt.shape()[0], mt.shape()[1]);
        let (md, xd) = (mt.data(), xt.data());
        let out = (0..rows)
            .map(|r| {
                md[r * cols..(r + 1) * cols]
                    .iter()
                    .zip(xd)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        let rg = self.rg(m) || self.rg(x);
        self.push(Op::MatVec(m, x), Tensor::vector(out), rg)
    }

    /// `mᵀ x` for a matrix `m` of shape `[rows, cols]` and `x` of length `rows`.
    pub fn mat_t_vec(&mut self, m: NodeId, x: NodeId) -> Result<NodeId, TensorError> {
        let (mt, xt) = (self.value(m), self.value(x));
        if !mt.is_matrix() || !xt.is_vector() || mt.shape()[0] != xt.len() {
            return Err(TensorError::ShapeMismatch {
                op: OpKind::MatTVec,
                shapes: shapes(&[mt, xt]),
            });
        }
        let (rows, cols) = (mt.shape()[0], mt.shape()[1]);
        let mut out = vec![0.0; cols];
        for r in 0..rows {
            let xr = xt.data()[r];
            for (o, a) in out.iter_mut().zip(&mt.data()[r * cols..(r + 1) * cols]) {
                *o += a * xr;
            }
        }
        let rg = self.rg(m) || self.rg(x);
        self.push(Op::MatTVec(m, x), Tensor::vector(out), rg)
    }

    fn binary_same_shape(
        &mut self,
        kind: OpKind,
        a: NodeId,
        b: NodeId,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor, TensorError> {
        let (at, bt) = (self.value(a), self.value(b));
        if at.shape() != bt.shape() {
            return Err(TensorError::ShapeMismatch {
                op: kind,
                shapes: shapes(&[at, bt]),
            });
        }
        let data = at.data().iter().zip(bt.data()).map(|(x, y)| f(*x, *y)).collect();
        Tensor::new(at.shape().to_vec(), data)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let t = self.binary_same_shape(OpKind::Add, a, b, |x, y| x + y)?;
        let rg = self.rg(a) || self.rg(b);
        self.push(Op::Add(a, b), t, rg)
    }

    /// Element-wise (Hadamard) product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let t = self.binary_same_shape(OpKind::Mul, a, b, |x, y| x * y)?;
        let rg = self.rg(a) || self.rg(b);
        self.push(Op::Mul(a, b), t, rg)
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId, TensorError> {
        if parts.is_empty() {
            return Err(TensorError::EmptyInput { op: OpKind::Concat });
        }
        let mut data = Vec::new();
        for &p in parts {
            let t = self.value(p);
            if !t.is_vector() {
                return Err(TensorError::ShapeMismatch {
                    op: OpKind::Concat,
                    shapes: parts.iter().map(|&q| self.value(q).shape().to_vec()).collect(),
                });
            }
            data.extend_from_slice(t.data());
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        self.push(Op::Concat(parts.to_vec()), Tensor::vector(data), rg)
    }

    pub fn sum(&mut self, items: &[NodeId]) -> Result<NodeId, TensorError> {
        let Some(&first) = items.first() else {
            return Err(TensorError::EmptyInput { op: OpKind::Sum });
        };
        let mut acc = self.value(first).clone();
        for &it in &items[1..] {
            let t = self.value(it);
            if t.shape() != acc.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: OpKind::Sum,
                    shapes: items.iter().map(|&q| self.value(q).shape().to_vec()).collect(),
                });
            }
            for (a, b) in acc.data_mut().iter_mut().zip(t.data()) {
                *a += b;
            }
        }
        let rg = items.iter().any(|&p| self.rg(p));
        self.push(Op::Sum(items.to_vec()), acc, rg)
    }

    fn unary(&self, a: NodeId, f: impl Fn(f64) -> f64) -> Tensor {
        let t = self.value(a);
        let data = t.data().iter().map(|&x| f(x)).collect();
        Tensor::new(t.shape().to_vec(), data).expect("shape preserved")
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId, TensorError> {
        let t = self.unary(a, f64::tanh);
        let rg = self.rg(a);
        self.push(Op::Tanh(a), t, rg)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId, TensorError> {
        let t = self.unary(a, sigmoid);
        let rg = self.rg(a);
        self.push(Op::Sigmoid(a), t, rg)
    }

    pub fn softmax(&mut self, a: NodeId) -> Result<NodeId, TensorError> {
        let t = self.value(a);
        if !t.is_vector() {
            return Err(TensorError::ShapeMismatch {
                op: OpKind::Softmax,
                shapes: shapes(&[t]),
            });
        }
        let mut data = t.data().to_vec();
        softmax_in_place(&mut data);
        let rg = self.rg(a);
        self.push(Op::Softmax(a), Tensor::vector(data), rg)
    }

    /// Row `row` of the matrix `table`.
    pub fn embedding(&mut self, table: NodeId, row: usize) -> Result<NodeId, TensorError> {
        let t = self.value(table);
        if !t.is_matrix() {
            return Err(TensorError::ShapeMismatch {
                op: OpKind::Embedding,
                shapes: shapes(&[t]),
            });
        }
        let (rows, cols) = (t.shape()[0], t.shape()[1]);
        if row >= rows {
            return Err(TensorError::IndexOutOfRange {
                op: OpKind::Embedding,
                index: row,
                len: rows,
            });
        }
        let data = t.data()[row * cols..(row + 1) * cols].to_vec();
        let rg = self.rg(table);
        self.push(Op::Embedding { table, row }, Tensor::vector(data), rg)
    }

    /// Multiplies by a pre-sampled (already rescaled) dropout mask.
    pub fn dropout(&mut self, input: NodeId, mask: Vec<f64>) -> Result<NodeId, TensorError> {
        let t = self.value(input);
        if t.len() != mask.len() {
            return Err(TensorError::ShapeMismatch {
                op: OpKind::Dropout,
                shapes: vec![t.shape().to_vec(), vec![mask.len()]],
            });
        }
        let data = t.data().iter().zip(&mask).map(|(a, m)| a * m).collect();
        let out = Tensor::new(t.shape().to_vec(), data)?;
        let rg = self.rg(input);
        self.push(Op::Dropout { input, mask }, out, rg)
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack_rows(&mut self, rows: &[NodeId]) -> Result<NodeId, TensorError> {
        let Some(&first) = rows.first() else {
            return Err(TensorError::EmptyInput { op: OpKind::StackRows });
        };
        let cols = self.value(first).len();
        let mut data = Vec::with_capacity(cols * rows.len());
        for &r in rows {
            let t = self.value(r);
            if !t.is_vector() || t.len() != cols {
                return Err(TensorError::ShapeMismatch {
                    op: OpKind::StackRows,
                    shapes: rows.iter().map(|&q| self.value(q).shape().to_vec()).collect(),
                });
            }
            data.extend_from_slice(t.data());
        }
        let rg = rows.iter().any(|&p| self.rg(p));
        let out = Tensor::matrix(rows.len(), cols, data)?;
        self.push(Op::StackRows(rows.to_vec()), out, rg)
    }

    /// `-log softmax(logits)[target]` as a scalar.
    pub fn cross_entropy(&mut self, logits: NodeId, target: usize) -> Result<NodeId, TensorError> {
        let t = self.value(logits);
        if !t.is_vector() {
            return Err(TensorError::ShapeMismatch {
                op: OpKind::CrossEntropy,
                shapes: shapes(&[t]),
            });
        }
        if target >= t.len() {
            return Err(TensorError::IndexOutOfRange {
                op: OpKind::CrossEntropy,
                index: target,
                len: t.len(),
            });
        }
        let max = t.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + t.data().iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        let loss = lse - t.data()[target];
        let mut probs = t.data().to_vec();
        softmax_in_place(&mut probs);
        let rg = self.rg(logits);
        self.push(
            Op::CrossEntropy {
                logits,
                target,
                probs,
            },
            Tensor::scalar(loss),
            rg,
        )
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> Result<NodeId, TensorError> {
        let t = self.unary(a, |x| x * factor);
        let rg = self.rg(a);
        self.push(Op::Scale(a, factor), t, rg)
    }

    /// Reverse pass from a scalar `seed`, returning the gradient of the seed
    /// with respect to every parameter that was recorded in this graph.
    pub fn backward(&self, seed: NodeId) -> Result<Gradients, TensorError> {
        let seed_val = self.value(seed);
        if !seed_val.is_scalar() {
            return Err(TensorError::NonScalarSeed {
                shape: seed_val.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..=seed.0).map(|_| None).collect();
        grads[seed.0] = Some(vec![1.0]);
        let mut out = Gradients {
            grads: vec![None; self.params.len()],
        };

        for i in (0..=seed.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            match &node.op {
                Op::Input => {}
                Op::Param(p) => {
                    let shape = self.params.get(*p).shape().to_vec();
                    out.grads[p.0] = Some(Tensor::new(shape, g)?);
                }
                Op::MatVec(m, x) => {
                    let (mt, xt) = (self.value(*m), self.value(*x));
                    let cols = mt.shape()[1];
                    if self.rg(*m) {
                        let gm = slot(&mut grads, *m, mt.len());
                        for (r, gr) in g.iter().enumerate() {
                            if *gr == 0.0 {
                                continue;
                            }
                            for (dst, xv) in gm[r * cols..(r + 1) * cols].iter_mut().zip(xt.data()) {
                                *dst += gr * xv;
                            }
                        }
                    }
                    if self.rg(*x) {
                        let gx = slot(&mut grads, *x, cols);
                        for (r, gr) in g.iter().enumerate() {
                            for (dst, mv) in gx.iter_mut().zip(&mt.data()[r * cols..(r + 1) * cols]) {
                                *dst += gr * mv;
                            }
                        }
                    }
                }
                Op::MatTVec(m, x) => {
                    let (mt, xt) = (self.value(*m), self.value(*x));
                    let (rows, cols) = (mt.shape()[0], mt.shape()[1]);
                    if self.rg(*m) {
                        let gm = slot(&mut grads, *m, mt.len());
                        for r in 0..rows {
                            let xr = xt.data()[r];
                            for (dst, gc) in gm[r * cols..(r + 1) * cols].iter_mut().zip(&g) {
                                *dst += xr * gc;
                            }
                        }
                    }
                    if self.rg(*x) {
                        let gx = slot(&mut grads, *x, rows);
                        for (r, dst) in gx.iter_mut().enumerate() {
                            *dst += mt.data()[r * cols..(r + 1) * cols]
                                .iter()
                                .zip(&g)
                                .map(|(a, b)| a * b)
                                .sum::<f64>();
                        }
                    }
                }
                Op::Add(a, b) => {
                    for x in [*a, *b] {
                        if self.rg(x) {
                            add_into(slot(&mut grads, x, g.len()), &g);
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a).data(), self.value(*b).data());
                    if self.rg(*a) {
                        let ga = slot(&mut grads, *a, g.len());
                        for ((dst, gv), bv) in ga.iter_mut().zip(&g).zip(bv) {
                            *dst += gv * bv;
                        }
                    }
                    if self.rg(*b) {
                        let gb = slot(&mut grads, *b, g.len());
                        for ((dst, gv), av) in gb.iter_mut().zip(&g).zip(av) {
                            *dst += gv * av;
                        }
                    }
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let n = self.value(*p).len();
                        if self.rg(*p) {
                            add_into(slot(&mut grads, *p, n), &g[offset..offset + n]);
                        }
                        offset += n;
                    }
                }
                Op::Sum(items) => {
                    for it in items {
                        if self.rg(*it) {
                            add_into(slot(&mut grads, *it, g.len()), &g);
                        }
                    }
                }
                Op::Tanh(a) => {
                    let y = node.value.as_ref().expect("owned").data();
                    let ga = slot(&mut grads, *a, g.len());
                    for ((dst, gv), yv) in ga.iter_mut().zip(&g).zip(y) {
                        *dst += gv * (1.0 - yv * yv);
                    }
                }
                Op::Sigmoid(a) => {
                    let y = node.value.as_ref().expect("owned").data();
                    let ga = slot(&mut grads, *a, g.len());
                    for ((dst, gv), yv) in ga.iter_mut().zip(&g).zip(y) {
                        *dst += gv * yv * (1.0 - yv);
                    }
                }
                Op::Softmax(a) => {
                    let y = node.value.as_ref().expect("owned").data();
                    let dot: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
                    let ga = slot(&mut grads, *a, g.len());
                    for ((dst, gv), yv) in ga.iter_mut().zip(&g).zip(y) {
                        *dst += yv * (gv - dot);
                    }
                }
                Op::Embedding { table, row } => {
                    let t = self.value(*table);
                    let cols = t.shape()[1];
                    let gt = slot(&mut grads, *table, t.len());
                    add_into(&mut gt[row * cols..(row + 1) * cols], &g);
                }
                Op::Dropout { input, mask } => {
                    let gi = slot(&mut grads, *input, g.len());
                    for ((dst, gv), m) in gi.iter_mut().zip(&g).zip(mask) {
                        *dst += gv * m;
                    }
                }
                Op::StackRows(rows) => {
                    let cols = self.value(rows[0]).len();
                    for (r, row) in rows.iter().enumerate() {
                        if self.rg(*row) {
                            add_into(slot(&mut grads, *row, cols), &g[r * cols..(r + 1) * cols]);
                        }
                    }
                }
                Op::CrossEntropy {
                    logits,
                    target,
                    probs,
                } => {
                    let gl = slot(&mut grads, *logits, probs.len());
                    let up = g[0];
                    for (k, (dst, p)) in gl.iter_mut().zip(probs).enumerate() {
                        let onehot = if k == *target { 1.0 } else { 0.0 };
                        *dst += up * (p - onehot);
                    }
                }
                Op::Scale(a, factor) => {
                    let ga = slot(&mut grads, *a, g.len());
                    for (dst, gv) in ga.iter_mut().zip(&g) {
                        *dst += gv * factor;
                    }
                }
            }
        }
        Ok(out)
    }
}

fn slot(grads: &mut [Option<Vec<f64>>], id: NodeId, len: usize) -> &mut Vec<f64> {
    grads[id.0].get_or_insert_with(|| vec![0.0; len])
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
