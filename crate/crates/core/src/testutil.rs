//! Helpers shared by unit tests.

use rand::Rng;

use crate::autodiff::{ParamId, ParamStore};
use crate::lstm::LstmParams;

#[path = "../tests/common/oracle.rs"]
pub mod oracle;

pub fn rvec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Overwrites every parameter with uniform draws in `[-scale, scale]`.
pub fn random_store_values<R: Rng>(store: &mut ParamStore, rng: &mut R, scale: f64) {
    let ids: Vec<ParamId> = store.ids().collect();
    for id in ids {
        for v in store.get_mut(id).data_mut() {
            *v = rng.gen_range(-scale..=scale);
        }
    }
}

pub fn mat(store: &ParamStore, id: ParamId) -> oracle::Mat {
    let t = store.get(id);
    let (rows, cols) = if t.is_matrix() {
        (t.shape()[0], t.shape()[1])
    } else {
        (t.len(), 1)
    };
    oracle::Mat {
        rows,
        cols,
        data: t.data().to_vec(),
    }
}

pub fn gates(store: &ParamStore, p: &LstmParams) -> oracle::Gates {
    oracle::Gates {
        w: p.w.iter().map(|&i| mat(store, i)).collect(),
        u: p.u.iter().map(|&i| mat(store, i)).collect(),
        b: p.b.iter().map(|&i| store.get(i).data().to_vec()).collect(),
    }
}

pub fn scalar_lstm_step(
    store: &ParamStore,
    p: &LstmParams,
    x: &[f64],
    h: &[f64],
    c: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    oracle::lstm_step(&gates(store, p), x, h, c)
}
