use super::{DenseNet, Loss};
use crate::{Result, Samples};

/// Gradients smaller than this are compared on an absolute scale.
pub const GRADIENT_FLOOR: f64 = 1e-4;

/// `|analytic - numeric| / max(|analytic|, floor)`
#[inline]
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(floor)
}

/// Largest relative disagreement between backpropagated gradients and
/// central differences over every parameter of `net`.
pub fn finite_diff_check(net: &DenseNet, batch: &Samples, eps: f64, loss: Loss) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(crate::Error::invalid("finite-difference step must be > 0"));
    }
    let (_, grads) = net.gradient(batch, loss)?;
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (g_idx, group) in grads.iter().enumerate() {
        for (i, &analytic) in group.iter().enumerate() {
            let original = param(&mut probe, g_idx, i);
            set_param(&mut probe, g_idx, i, original + eps);
            let plus = probe.loss(batch, loss)?;
            set_param(&mut probe, g_idx, i, original - eps);
            let minus = probe.loss(batch, loss)?;
            set_param(&mut probe, g_idx, i, original);
            let numeric = (plus - minus) / (2.0 * eps);
            worst = worst.max(relative_error(analytic, numeric, GRADIENT_FLOOR));
        }
    }
    Ok(worst)
}

fn param(net: &mut DenseNet, group: usize, i: usize) -> f64 {
    net.param_groups_mut()[group][i]
}

fn set_param(net: &mut DenseNet, group: usize, i: usize, v: f64) {
    net.param_groups_mut()[group][i] = v;
}
