use rand::Rng;

use crate::autodiff::{filled, glorot_uniform, Graph, NodeId, ParamId, ParamStore, TensorError};
use crate::lstm::{affine, bilstm_last, bilstm_run, CellError, LstmParams, LstmState, F, GATES, I, O, U};

fn gate_inputs<R: Rng>(
    store: &mut ParamStore,
    prefix: &str,
    input_dim: usize,
    hidden_dim: usize,
    rng: &mut R,
) -> Result<([ParamId; 4], [ParamId; 4]), TensorError> {
    let mut w = [ParamId(0); 4];
    let mut b = [ParamId(0); 4];
    for (k, g) in GATES.iter().enumerate() {
        w[k] = store.add(format!("{prefix}.W{g}"), glorot_uniform(rng, hidden_dim, input_dim))?;
        let bias = if k == F { 1.0 } else { 0.0 };
        b[k] = store.add(format!("{prefix}.b{g}"), filled(hidden_dim, bias))?;
    }
    Ok((w, b))
}

fn check_vec(g: &Graph<'_>, node: NodeId, expected: usize, what: &'static str) -> Result<(), CellError> {
    let t = g.value(node);
    if !t.is_vector() || t.len() != expected {
        return Err(CellError::Dimension {
            what,
            expected,
            got: t.len(),
        });
    }
    Ok(())
}

fn check_children(g: &Graph<'_>, children: &[LstmState], d: usize) -> Result<(), CellError> {
    for s in children {
        check_vec(g, s.h, d, "child h")?;
        check_vec(g, s.c, d, "child c")?;
    }
    Ok(())
}

/// `c = Σ_k c_k ⊙ f_k + i ⊙ u`, `h = o ⊙ tanh(c)` from gate pre-activations.
fn combine(
    g: &mut Graph<'_>,
    forget: &[(NodeId, NodeId)],
    pre_u: NodeId,
    pre_i: NodeId,
    pre_o: NodeId,
) -> Result<LstmState, CellError> {
    let u = g.tanh(pre_u)?;
    let i = g.sigmoid(pre_i)?;
    let o = g.sigmoid(pre_o)?;
    let mut terms = Vec::with_capacity(forget.len() + 1);
    for &(pre_f, ck) in forget {
        let f = g.sigmoid(pre_f)?;
        terms.push(g.mul(ck, f)?);
    }
    terms.push(g.mul(i, u)?);
    let c = if terms.len() == 1 { terms[0] } else { g.sum(&terms)? };
    let tc = g.tanh(c)?;
    let h = g.mul(o, tc)?;
    Ok(LstmState { h, c })
}

/// Child-sum Tree-LSTM: one recurrent matrix per gate, applied to the sum of
/// child states (per child for the forget gate).
#[derive(Clone, Debug, PartialEq)]
pub struct ChildSumParams {
    pub w: [ParamId; 4],
    pub u: [ParamId; 4],
    pub b: [ParamId; 4],
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl ChildSumParams {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Result<Self, TensorError> {
        let (w, b) = gate_inputs(store, prefix, input_dim, hidden_dim, rng)?;
        let mut u = [ParamId(0); 4];
        for (k, gname) in GATES.iter().enumerate() {
            u[k] = store.add(format!("{prefix}.U{gname}"), glorot_uniform(rng, hidden_dim, hidden_dim))?;
        }
        Ok(Self {
            w,
            u,
            b,
            input_dim,
            hidden_dim,
        })
    }
}

pub fn child_sum_step(
    g: &mut Graph<'_>,
    x: NodeId,
    children: &[LstmState],
    p: &ChildSumParams,
) -> Result<LstmState, CellError> {
    check_vec(g, x, p.input_dim, "cell input")?;
    check_children(g, children, p.hidden_dim)?;
    let hsum = match children.len() {
        0 => None,
        1 => Some(children[0].h),
        _ => Some(g.sum(&children.iter().map(|s| s.h).collect::<Vec<_>>())?),
    };
    let mut forget = Vec::with_capacity(children.len());
    for s in children {
        forget.push((affine(g, p.w[F], x, Some((p.u[F], s.h)), p.b[F])?, s.c));
    }
    let pre_u = affine(g, p.w[U], x, hsum.map(|h| (p.u[U], h)), p.b[U])?;
    let pre_i = affine(g, p.w[I], x, hsum.map(|h| (p.u[I], h)), p.b[I])?;
    let pre_o = affine(g, p.w[O], x, hsum.map(|h| (p.u[O], h)), p.b[O])?;
    combine(g, &forget, pre_u, pre_i, pre_o)
}

/// N-ary Tree-LSTM over exactly `n` child positions. Every recurrent map
/// reads the concatenation of all child hidden states; the forget gate has
/// one such map per position.
#[derive(Clone, Debug, PartialEq)]
pub struct NaryParams {
    pub w: [ParamId; 4],
    pub b: [ParamId; 4],
    /// Forget maps `d × n·d`, one per position.
    pub uf: Vec<ParamId>,
    /// Maps `d × n·d` for the u, i and o gates.
    pub u: [ParamId; 3],
    pub arity: usize,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl NaryParams {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        arity: usize,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Result<Self, TensorError> {
        let (w, b) = gate_inputs(store, prefix, input_dim, hidden_dim, rng)?;
        let wide = arity * hidden_dim;
        let uf = (0..arity)
            .map(|k| store.add(format!("{prefix}.Uf{k}"), glorot_uniform(rng, hidden_dim, wide)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut u = [ParamId(0); 3];
        for (slot, gname) in GATES[1..].iter().enumerate() {
            u[slot] = store.add(format!("{prefix}.U{gname}"), glorot_uniform(rng, hidden_dim, wide))?;
        }
        Ok(Self {
            w,
            b,
            uf,
            u,
            arity,
            input_dim,
            hidden_dim,
        })
    }
}

/// `children[k] = None` is an absent position (zero state).
pub fn nary_step(
    g: &mut Graph<'_>,
    x: NodeId,
    children: &[Option<LstmState>],
    p: &NaryParams,
) -> Result<LstmState, CellError> {
    if children.len() != p.arity {
        return Err(CellError::ChildCount {
            expected: p.arity,
            got: children.len(),
        });
    }
    check_vec(g, x, p.input_dim, "cell input")?;
    let present: Vec<LstmState> = children.iter().flatten().copied().collect();
    check_children(g, &present, p.hidden_dim)?;
    // With no child present the concatenation is all zeros and the
    // recurrent terms vanish, so they are skipped.
    let hcat = if present.is_empty() {
        None
    } else {
        let parts: Vec<NodeId> = children
            .iter()
            .map(|c| match c {
                Some(s) => s.h,
                None => g.zeros(p.hidden_dim),
            })
            .collect();
        Some(g.concat(&parts)?)
    };
    let mut forget = Vec::with_capacity(present.len());
    for (k, c) in children.iter().enumerate() {
        if let Some(s) = c {
            let h = hcat.expect("present child implies concatenation");
            forget.push((affine(g, p.w[F], x, Some((p.uf[k], h)), p.b[F])?, s.c));
        }
    }
    let pre_u = affine(g, p.w[U], x, hcat.map(|h| (p.u[0], h)), p.b[U])?;
    let pre_i = affine(g, p.w[I], x, hcat.map(|h| (p.u[1], h)), p.b[I])?;
    let pre_o = affine(g, p.w[O], x, hcat.map(|h| (p.u[2], h)), p.b[O])?;
    combine(g, &forget, pre_u, pre_i, pre_o)
}

/// Multi-way Tree-LSTM: each gate reads its children through its own
/// bidirectional chain LSTM before a `d × 2d` linear map.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiwayParams {
    pub w: [ParamId; 4],
    pub b: [ParamId; 4],
    /// (forward, backward) chain LSTM per gate, `d → d`.
    pub lstms: [(LstmParams, LstmParams); 4],
    /// Post-LSTM maps `d × 2d` per gate.
    pub u: [ParamId; 4],
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl MultiwayParams {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Result<Self, TensorError> {
        let (w, b) = gate_inputs(store, prefix, input_dim, hidden_dim, rng)?;
        let mut lstms = Vec::with_capacity(4);
        let mut u = [ParamId(0); 4];
        for (k, gname) in GATES.iter().enumerate() {
            let fwd = LstmParams::init(store, &format!("{prefix}.L{gname}.fwd"), hidden_dim, hidden_dim, rng)?;
            let bwd = LstmParams::init(store, &format!("{prefix}.L{gname}.bwd"), hidden_dim, hidden_dim, rng)?;
            lstms.push((fwd, bwd));
            u[k] = store.add(format!("{prefix}.U{gname}"), glorot_uniform(rng, hidden_dim, 2 * hidden_dim))?;
        }
        Ok(Self {
            w,
            b,
            lstms: lstms.try_into().expect("four gates"),
            u,
            input_dim,
            hidden_dim,
        })
    }
}

pub fn multiway_step(
    g: &mut Graph<'_>,
    x: NodeId,
    children: &[LstmState],
    p: &MultiwayParams,
) -> Result<LstmState, CellError> {
    check_vec(g, x, p.input_dim, "cell input")?;
    check_children(g, children, p.hidden_dim)?;
    if children.is_empty() {
        // Gate-LSTM outputs are zero for a leaf, so only W x + b remains.
        let pre_u = affine(g, p.w[U], x, None, p.b[U])?;
        let pre_i = affine(g, p.w[I], x, None, p.b[I])?;
        let pre_o = affine(g, p.w[O], x, None, p.b[O])?;
        return combine(g, &[], pre_u, pre_i, pre_o);
    }
    let hs: Vec<NodeId> = children.iter().map(|s| s.h).collect();
    let fseq = bilstm_run(g, &hs, &p.lstms[F].0, &p.lstms[F].1)?;
    let mut forget = Vec::with_capacity(children.len());
    for (s, &fk) in children.iter().zip(&fseq) {
        forget.push((affine(g, p.w[F], x, Some((p.u[F], fk)), p.b[F])?, s.c));
    }
    let mut pre = [x; 3];
    for (slot, gate) in [U, I, O].into_iter().enumerate() {
        let last = bilstm_last(g, &hs, &p.lstms[gate].0, &p.lstms[gate].1)?;
        pre[slot] = affine(g, p.w[gate], x, Some((p.u[gate], last)), p.b[gate])?;
    }
    combine(g, &forget, pre[0], pre[1], pre[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{grad_check, Tensor};
    use crate::testutil::{gates, mat, oracle, random_store_values, rvec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn input(g: &mut Graph<'_>, v: &[f64]) -> NodeId {
        g.input(Tensor::vector(v.to_vec())).unwrap()
    }

    fn states(g: &mut Graph<'_>, raw: &[(Vec<f64>, Vec<f64>)]) -> Vec<LstmState> {
        raw.iter()
            .map(|(h, c)| LstmState {
                h: input(g, h),
                c: input(g, c),
            })
            .collect()
    }

    fn random_children(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..n).map(|_| (rvec(rng, d), rvec(rng, d))).collect()
    }

    fn diff(g: &Graph<'_>, a: LstmState, b: LstmState) -> f64 {
        g.value(a.h).max_abs_diff(g.value(b.h)).max(g.value(a.c).max_abs_diff(g.value(b.c)))
    }

    fn close(g: &Graph<'_>, s: LstmState, want: &(Vec<f64>, Vec<f64>)) -> f64 {
        let dh = g.value(s.h).max_abs_diff(&Tensor::vector(want.0.clone()));
        let dc = g.value(s.c).max_abs_diff(&Tensor::vector(want.1.clone()));
        dh.max(dc)
    }

    #[test]
    fn zero_params_leaf_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut store = ParamStore::new();
        let cs = ChildSumParams::init(&mut store, "cs", 3, 2, &mut rng).unwrap();
        let na = NaryParams::init(&mut store, "na", 2, 3, 2, &mut rng).unwrap();
        let mw = MultiwayParams::init(&mut store, "mw", 3, 2, &mut rng).unwrap();
        store.set_all(0.0);
        let mut g = Graph::new(&store);
        let x = input(&mut g, &[1.0, -2.0, 0.5]);
        let zero = Tensor::vector(vec![0.0, 0.0]);
        for s in [
            child_sum_step(&mut g, x, &[], &cs).unwrap(),
            nary_step(&mut g, x, &[None, None], &na).unwrap(),
            multiway_step(&mut g, x, &[], &mw).unwrap(),
        ] {
            assert_eq!(g.value(s.h), &zero);
            assert_eq!(g.value(s.c), &zero);
        }
    }

    #[test]
    fn child_sum_matches_oracle_and_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for trial in 0..50 {
            let (d1, d2) = (3, 4);
            let mut store = ParamStore::new();
            let p = ChildSumParams::init(&mut store, "cs", d1, d2, &mut rng).unwrap();
            random_store_values(&mut store, &mut rng, 1.0);
            let ora = oracle::Gates {
                w: p.w.iter().map(|&i| mat(&store, i)).collect(),
                u: p.u.iter().map(|&i| mat(&store, i)).collect(),
                b: p.b.iter().map(|&i| store.get(i).data().to_vec()).collect(),
            };
            let n = trial % 5;
            let xs = rvec(&mut rng, d1);
            let kids = random_children(&mut rng, n, d2);
            let mut g = Graph::new(&store);
            let x = input(&mut g, &xs);
            let cs = states(&mut g, &kids);
            let out = child_sum_step(&mut g, x, &cs, &p).unwrap();
            assert!(close(&g, out, &oracle::child_sum(&ora, &xs, &kids)) < 1e-12);
            let mut rev = cs.clone();
            rev.reverse();
            let out2 = child_sum_step(&mut g, x, &rev, &p).unwrap();
            assert!(diff(&g, out, out2) < 1e-12);
        }
    }

    #[test]
    fn nary_matches_oracle_and_is_order_sensitive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let (d1, d2) = (3, 4);
            let mut store = ParamStore::new();
            let p = NaryParams::init(&mut store, "na", 2, d1, d2, &mut rng).unwrap();
            random_store_values(&mut store, &mut rng, 1.0);
            let w: Vec<_> = p.w.iter().map(|&i| mat(&store, i)).collect();
            let b: Vec<_> = p.b.iter().map(|&i| store.get(i).data().to_vec()).collect();
            let uf: Vec<_> = p.uf.iter().map(|&i| mat(&store, i)).collect();
            let mut u = vec![mat(&store, p.u[0])];
            u.extend(p.u.iter().map(|&i| mat(&store, i)));
            let xs = rvec(&mut rng, d1);
            let kids = random_children(&mut rng, 2, d2);
            let mut g = Graph::new(&store);
            let x = input(&mut g, &xs);
            let cs = states(&mut g, &kids);
            let out = nary_step(&mut g, x, &[Some(cs[0]), Some(cs[1])], &p).unwrap();
            assert!(close(&g, out, &oracle::nary(&w, &b, &uf, &u, &xs, &kids)) < 1e-12);
            let swapped = nary_step(&mut g, x, &[Some(cs[1]), Some(cs[0])], &p).unwrap();
            assert!(diff(&g, out, swapped) > 1e-6);
            // An absent slot equals an explicit zero state.
            let zeros = vec![(vec![0.0; d2], vec![0.0; d2]), kids[1].clone()];
            let half = nary_step(&mut g, x, &[None, Some(cs[1])], &p).unwrap();
            assert!(close(&g, half, &oracle::nary(&w, &b, &uf, &u, &xs, &zeros)) < 1e-12);
        }
    }

    #[test]
    fn nary_rejects_wrong_arity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut store = ParamStore::new();
        let p = NaryParams::init(&mut store, "na", 2, 2, 2, &mut rng).unwrap();
        let mut g = Graph::new(&store);
        let x = input(&mut g, &[0.0, 0.0]);
        assert_eq!(
            nary_step(&mut g, x, &[None], &p).unwrap_err(),
            CellError::ChildCount { expected: 2, got: 1 }
        );
    }

    fn multiway_oracle(
        store: &ParamStore,
        p: &MultiwayParams,
        xs: &[f64],
        kids: &[(Vec<f64>, Vec<f64>)],
    ) -> (Vec<f64>, Vec<f64>) {
        let w: Vec<_> = p.w.iter().map(|&i| mat(store, i)).collect();
        let b: Vec<_> = p.b.iter().map(|&i| store.get(i).data().to_vec()).collect();
        let l: Vec<_> = p.lstms.iter().map(|(f, bk)| (gates(store, f), gates(store, bk))).collect();
        let u: Vec<_> = p.u.iter().map(|&i| mat(store, i)).collect();
        oracle::multiway(&w, &b, &l, &u, xs, kids)
    }

    #[test]
    fn multiway_matches_oracle_and_is_order_sensitive() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..40 {
            let (d1, d2) = (3, 3);
            let mut store = ParamStore::new();
            let p = MultiwayParams::init(&mut store, "mw", d1, d2, &mut rng).unwrap();
            random_store_values(&mut store, &mut rng, 1.0);
            let n = trial % 6;
            let xs = rvec(&mut rng, d1);
            let kids = random_children(&mut rng, n, d2);
            let mut g = Graph::new(&store);
            let x = input(&mut g, &xs);
            let cs = states(&mut g, &kids);
            let out = multiway_step(&mut g, x, &cs, &p).unwrap();
            assert!(close(&g, out, &multiway_oracle(&store, &p, &xs, &kids)) < 1e-12);
            if n >= 2 {
                let mut sw = cs.clone();
                sw.swap(0, 1);
                let out2 = multiway_step(&mut g, x, &sw, &p).unwrap();
                assert!(diff(&g, out, out2) > 1e-6);
            }
        }
    }

    #[test]
    fn cells_pass_gradient_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::new();
        let cs = ChildSumParams::init(&mut store, "cs", 2, 3, &mut rng).unwrap();
        let na = NaryParams::init(&mut store, "na", 2, 2, 3, &mut rng).unwrap();
        let mw = MultiwayParams::init(&mut store, "mw", 2, 3, &mut rng).unwrap();
        random_store_values(&mut store, &mut rng, 0.7);
        let xs = rvec(&mut rng, 2);
        let kids = random_children(&mut rng, 3, 3);
        let proj = rvec(&mut rng, 6);
        let ids: Vec<ParamId> = store.ids().collect();
        let report = grad_check(&store, &ids, 1e-3, |g| {
            let x = g.input(Tensor::vector(xs.clone()))?;
            let mut ch = Vec::new();
            for (h, c) in &kids {
                ch.push(LstmState {
                    h: g.input(Tensor::vector(h.clone()))?,
                    c: g.input(Tensor::vector(c.clone()))?,
                });
            }
            let a = child_sum_step(g, x, &ch, &cs).unwrap();
            let b = nary_step(g, x, &[Some(ch[0]), None], &na).unwrap();
            let m = multiway_step(g, x, &ch, &mw).unwrap();
            let s1 = g.sum(&[a.h, b.h, m.h])?;
            let s2 = g.sum(&[a.c, b.c, m.c])?;
            let cat = g.concat(&[s1, s2])?;
            let w = g.input(Tensor::matrix(1, 6, proj.clone())?)?;
            g.matvec(w, cat)
        })
        .unwrap();
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }
}
