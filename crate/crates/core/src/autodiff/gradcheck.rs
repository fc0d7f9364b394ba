use super::{Graph, NodeId, ParamId, ParamStore, TensorError};

/// Denominator floor of the relative error. Gradients smaller than this are
/// effectively compared in absolute terms, where difference quotients carry
/// about 1e-12 of rounding noise.
pub const GRAD_FLOOR: f64 = 1e-7;

/// Outcome of a finite-difference gradient comparison.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// `max |analytic - numeric| / max(|analytic|, |numeric|, GRAD_FLOOR)` over all
    /// checked entries.
    pub max_rel_error: f64,
    /// Parameter name and flat offset where the maximum occurred.
    pub worst: Option<(String, usize)>,
    /// Analytic and numeric values at `worst`.
    pub worst_values: (f64, f64),
    pub checked: usize,
}

/// Compares the reverse-mode gradient of `loss` against fourth-order central
/// differences for every entry of every parameter in `params`.
///
/// `loss` must be deterministic: it is re-evaluated four times per entry on a
/// perturbed copy of the store.
pub fn grad_check<F>(
    store: &ParamStore,
    params: &[ParamId],
    eps: f64,
    loss: F,
) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&mut Graph<'_>) -> Result<NodeId, TensorError>,
{
    if !(eps > 0.0 && eps <= 1e-2) {
        return Err(TensorError::BadEpsilon(eps));
    }
    let analytic = {
        let mut g = Graph::new(store);
        let seed = loss(&mut g)?;
        g.backward(seed)?
    };

    let eval = |s: &ParamStore| -> Result<f64, TensorError> {
        let mut g = Graph::new(s);
        let out = loss(&mut g)?;
        let v = g.value(out);
        if !v.is_scalar() {
            return Err(TensorError::NonScalarSeed {
                shape: v.shape().to_vec(),
            });
        }
        Ok(v.data()[0])
    };

    let mut work = store.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        worst_values: (0.0, 0.0),
        checked: 0,
    };
    for &pid in params {
        let dense = analytic.dense(pid, store);
        for k in 0..store.get(pid).len() {
            let orig = store.get(pid).data()[k];
            let mut at = |offset: f64| -> Result<f64, TensorError> {
                work.get_mut(pid).data_mut()[k] = orig + offset;
                eval(&work)
            };
            let (p1, m1, p2, m2) = (at(eps)?, at(-eps)?, at(2.0 * eps)?, at(-2.0 * eps)?);
            work.get_mut(pid).data_mut()[k] = orig;

            let numeric = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * eps);
            let a = dense.data()[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_FLOOR);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((store.name(pid).to_string(), k));
                report.worst_values = (a, numeric);
            }
        }
    }
    Ok(report)
}
