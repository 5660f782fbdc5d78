use super::net::{BnnNet, NetNoise};
use crate::nnet::{relative_error, GRADIENT_FLOOR};
use crate::{Error, Result, Samples};

/// Largest relative gap between analytic negative-ELBO gradients and central
/// differences, with the noise held fixed.
pub fn bnn_finite_diff_check(
    net: &BnnNet,
    batch: &Samples,
    noise: &NetNoise,
    kl_weight: f64,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let (_, grads) = net.loss_and_grad(batch, noise, kl_weight)?;
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (g, analytic) in grads.iter().enumerate() {
        for i in 0..analytic.len() {
            let orig = probe.param_groups_mut()[g][i];
            probe.param_groups_mut()[g][i] = orig + eps;
            let plus = probe.loss_with_noise(batch, noise, kl_weight)?;
            probe.param_groups_mut()[g][i] = orig - eps;
            let minus = probe.loss_with_noise(batch, noise, kl_weight)?;
            probe.param_groups_mut()[g][i] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            worst = worst.max(relative_error(analytic[i], numeric, GRADIENT_FLOOR));
        }
    }
    Ok(worst)
}
