use super::{ParamStore, Session};
use crate::autograd::{Mode, Var};
use crate::error::Result;

/// Agreement between reverse-mode and central-difference gradients for one tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub name: String,
    /// `|analytic - numeric| / max(|analytic|, |numeric|, floor)` in the Euclidean norm.
    pub rel_error: f64,
    pub analytic_norm: f64,
}

/// Compares the gradient of `loss` with respect to every tensor in `store`
/// against central differences of step `step`. `floor` bounds the
/// denominator of the relative error from below so that tensors whose true
/// gradient is zero are judged by absolute error.
pub fn check_gradients(
    store: &mut ParamStore<f64>,
    mode: Mode,
    step: f64,
    floor: f64,
    mut loss: impl FnMut(&mut Session<'_, f64>) -> Result<Var>,
) -> Result<Vec<GradCheck>> {
    let analytic = {
        let mut s = store.session(mode);
        let l = loss(&mut s)?;
        s.graph.backward(l)?;
        s.grads()
    };
    let mut eval = |store: &mut ParamStore<f64>| -> Result<f64> {
        let mut s = store.session(mode);
        let l = loss(&mut s)?;
        Ok(s.value(l).item())
    };
    let ids: Vec<_> = store.ids().collect();
    let mut out = Vec::with_capacity(ids.len());
    for (id, grad) in ids.into_iter().zip(analytic) {
        let n = store.get(id).numel();
        let mut numeric = vec![0.0; n];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let orig = store.get(id).data()[i];
            store.get_mut(id).data_mut()[i] = orig + step;
            let up = eval(store)?;
            store.get_mut(id).data_mut()[i] = orig - step;
            let down = eval(store)?;
            store.get_mut(id).data_mut()[i] = orig;
            *slot = (up - down) / (2.0 * step);
        }
        let analytic: Vec<f64> = grad.map(|g| g.into_data()).unwrap_or_else(|| vec![0.0; n]);
        let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
        let diff = norm(&mut analytic.iter().zip(&numeric).map(|(a, b)| a - b));
        let na = norm(&mut analytic.iter().copied());
        let nn = norm(&mut numeric.iter().copied());
        out.push(GradCheck {
            name: store.name(id).to_string(),
            rel_error: diff / na.max(nn).max(floor),
            analytic_norm: na,
        });
    }
    Ok(out)
}
