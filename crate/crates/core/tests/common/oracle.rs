//! Straight-line scalar re-implementations of the cell equations.
//!
//! Deliberately independent of the autodiff graph: plain nested loops over
//! `Vec<f64>`, no shared helpers with the library. Shared between the unit
//! tests (via `#[path]`) and the integration tests.
#![allow(dead_code)]

#[derive(Clone, Debug)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn mv(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "oracle matvec shape");
        let mut out = vec![0.0; self.rows];
        for r in 0..self.rows {
            let mut acc = 0.0;
            for c in 0..self.cols {
                acc += self.data[r * self.cols + c] * x[c];
            }
            out[r] = acc;
        }
        out
    }
}

pub fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn add3(a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    (0..a.len()).map(|k| a[k] + b[k] + c[k]).collect()
}

/// Gate parameters in order f, u, i, o.
#[derive(Clone, Debug)]
pub struct Gates {
    pub w: Vec<Mat>,
    pub u: Vec<Mat>,
    pub b: Vec<Vec<f64>>,
}

pub fn lstm_step(p: &Gates, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let f: Vec<f64> = add3(&p.w[0].mv(x), &p.u[0].mv(h), &p.b[0]).into_iter().map(sig).collect();
    let u: Vec<f64> = add3(&p.w[1].mv(x), &p.u[1].mv(h), &p.b[1]).into_iter().map(f64::tanh).collect();
    let i: Vec<f64> = add3(&p.w[2].mv(x), &p.u[2].mv(h), &p.b[2]).into_iter().map(sig).collect();
    let o: Vec<f64> = add3(&p.w[3].mv(x), &p.u[3].mv(h), &p.b[3]).into_iter().map(sig).collect();
    let n = f.len();
    let mut c_new = vec![0.0; n];
    let mut h_new = vec![0.0; n];
    for k in 0..n {
        c_new[k] = c[k] * f[k] + i[k] * u[k];
        h_new[k] = o[k] * c_new[k].tanh();
    }
    (h_new, c_new)
}

pub fn lstm_run(p: &Gates, seq: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = p.b[0].len();
    let mut h = vec![0.0; d];
    let mut c = vec![0.0; d];
    let mut out = Vec::new();
    for x in seq {
        let (h2, c2) = lstm_step(p, x, &h, &c);
        out.push(h2.clone());
        h = h2;
        c = c2;
    }
    out
}

pub fn bilstm(fwd: &Gates, bwd: &Gates, seq: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = seq.len();
    let a = lstm_run(fwd, seq);
    let rev: Vec<Vec<f64>> = seq.iter().rev().cloned().collect();
    let b = lstm_run(bwd, &rev);
    (0..n)
        .map(|i| {
            let mut v = a[i].clone();
            v.extend_from_slice(&b[n - 1 - i]);
            v
        })
        .collect()
}

/// Child-sum cell: `w`, `b` input side; `u` recurrent, all in f,u,i,o order.
pub fn child_sum(p: &Gates, x: &[f64], children: &[(Vec<f64>, Vec<f64>)]) -> (Vec<f64>, Vec<f64>) {
    let d = p.b[0].len();
    let mut hsum = vec![0.0; d];
    for (h, _) in children {
        for k in 0..d {
            hsum[k] += h[k];
        }
    }
    let wf = p.w[0].mv(x);
    let mut c = vec![0.0; d];
    for (h, ck) in children {
        let uf = p.u[0].mv(h);
        for k in 0..d {
            let f = sig(wf[k] + uf[k] + p.b[0][k]);
            c[k] += ck[k] * f;
        }
    }
    let u: Vec<f64> = add3(&p.w[1].mv(x), &p.u[1].mv(&hsum), &p.b[1]).into_iter().map(f64::tanh).collect();
    let i: Vec<f64> = add3(&p.w[2].mv(x), &p.u[2].mv(&hsum), &p.b[2]).into_iter().map(sig).collect();
    let o: Vec<f64> = add3(&p.w[3].mv(x), &p.u[3].mv(&hsum), &p.b[3]).into_iter().map(sig).collect();
    let mut h = vec![0.0; d];
    for k in 0..d {
        c[k] += i[k] * u[k];
        h[k] = o[k] * c[k].tanh();
    }
    (h, c)
}

/// N-ary cell. `uf` holds one `d × N·d` forget matrix per position; `u[1..4]`
/// are the `d × N·d` maps for u, i, o (`u[0]` unused).
pub fn nary(
    w: &[Mat],
    b: &[Vec<f64>],
    uf: &[Mat],
    u: &[Mat],
    x: &[f64],
    children: &[(Vec<f64>, Vec<f64>)],
) -> (Vec<f64>, Vec<f64>) {
    let d = b[0].len();
    let mut hcat = Vec::new();
    for (h, _) in children {
        hcat.extend_from_slice(h);
    }
    let wf = w[0].mv(x);
    let mut c = vec![0.0; d];
    for (k, (_, ck)) in children.iter().enumerate() {
        let ufk = uf[k].mv(&hcat);
        for j in 0..d {
            c[j] += ck[j] * sig(wf[j] + ufk[j] + b[0][j]);
        }
    }
    let uu: Vec<f64> = add3(&w[1].mv(x), &u[1].mv(&hcat), &b[1]).into_iter().map(f64::tanh).collect();
    let ii: Vec<f64> = add3(&w[2].mv(x), &u[2].mv(&hcat), &b[2]).into_iter().map(sig).collect();
    let oo: Vec<f64> = add3(&w[3].mv(x), &u[3].mv(&hcat), &b[3]).into_iter().map(sig).collect();
    let mut h = vec![0.0; d];
    for j in 0..d {
        c[j] += ii[j] * uu[j];
        h[j] = oo[j] * c[j].tanh();
    }
    (h, c)
}

/// Multi-way cell. `gate_lstms[g]` is the (forward, backward) pair for gate
/// g; `u[g]` maps the `2d` bidirectional output to `d`.
pub fn multiway(
    w: &[Mat],
    b: &[Vec<f64>],
    gate_lstms: &[(Gates, Gates)],
    u: &[Mat],
    x: &[f64],
    children: &[(Vec<f64>, Vec<f64>)],
) -> (Vec<f64>, Vec<f64>) {
    let d = b[0].len();
    let hs: Vec<Vec<f64>> = children.iter().map(|(h, _)| h.clone()).collect();
    let n = hs.len();
    // Gate-LSTM outputs; zero vectors for a leaf.
    let mut last = vec![vec![0.0; 2 * d]; 4];
    let mut fseq = Vec::new();
    if n > 0 {
        fseq = bilstm(&gate_lstms[0].0, &gate_lstms[0].1, &hs);
        for g in 1..4 {
            let seq = bilstm(&gate_lstms[g].0, &gate_lstms[g].1, &hs);
            last[g] = seq[n - 1].clone();
        }
    }
    let wf = w[0].mv(x);
    let mut c = vec![0.0; d];
    for k in 0..n {
        let ufk = u[0].mv(&fseq[k]);
        for j in 0..d {
            c[j] += children[k].1[j] * sig(wf[j] + ufk[j] + b[0][j]);
        }
    }
    let uu: Vec<f64> = add3(&w[1].mv(x), &u[1].mv(&last[1]), &b[1]).into_iter().map(f64::tanh).collect();
    let ii: Vec<f64> = add3(&w[2].mv(x), &u[2].mv(&last[2]), &b[2]).into_iter().map(sig).collect();
    let oo: Vec<f64> = add3(&w[3].mv(x), &u[3].mv(&last[3]), &b[3]).into_iter().map(sig).collect();
    let mut h = vec![0.0; d];
    for j in 0..d {
        c[j] += ii[j] * uu[j];
        h[j] = oo[j] * c[j].tanh();
    }
    (h, c)
}

/// Additive attention: `softmax_j(wa · tanh(Wa [hd; he_j]))`.
pub fn attention(wa_mat: &Mat, wa_vec: &[f64], hd: &[f64], enc: &[Vec<f64>]) -> Vec<f64> {
    let scores: Vec<f64> = enc
        .iter()
        .map(|he| {
            let mut cat = hd.to_vec();
            cat.extend_from_slice(he);
            let t = wa_mat.mv(&cat);
            let mut s = 0.0;
            for k in 0..t.len() {
                s += wa_vec[k] * t[k].tanh();
            }
            s
        })
        .collect();
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

pub fn weighted_sum(alpha: &[f64], enc: &[Vec<f64>]) -> Vec<f64> {
    let mut v = vec![0.0; enc[0].len()];
    for (a, h) in alpha.iter().zip(enc) {
        for k in 0..v.len() {
            v[k] += a * h[k];
        }
    }
    v
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|s| (s - m).exp()).collect();
    let t: f64 = e.iter().sum();
    e.into_iter().map(|v| v / t).collect()
}
