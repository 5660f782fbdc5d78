use crate::math::{inv_softplus, log, softplus};
use crate::{Error, Result};

/// Lower bound added to every softplus-parameterised standard deviation.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// Variational parameters of one weight: `sigma = SIGMA_FLOOR + softplus(rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPosterior {
    pub mu: f64,
    pub rho: f64,
}

impl GaussianPosterior {
    #[inline]
    pub fn sigma(&self) -> f64 {
        SIGMA_FLOOR + softplus(self.rho)
    }

    pub fn from_mu_sigma(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > SIGMA_FLOOR) || !mu.is_finite() || !sigma.is_finite() {
            return Err(Error::invalid("posterior sigma must exceed the floor and be finite"));
        }
        Ok(Self {
            mu,
            rho: inv_softplus(sigma - SIGMA_FLOOR),
        })
    }
}

#[inline]
pub(crate) fn rho_for_sigma(sigma: f64) -> f64 {
    inv_softplus(sigma - SIGMA_FLOOR)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianPrior {
    pub mean: f64,
    pub std: f64,
}

impl GaussianPrior {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        if !(std > 0.0) || !std.is_finite() || !mean.is_finite() {
            return Err(Error::invalid("prior std must be positive and finite"));
        }
        Ok(Self { mean, std })
    }

    pub fn standard() -> Self {
        Self { mean: 0.0, std: 1.0 }
    }
}

impl Default for GaussianPrior {
    fn default() -> Self {
        Self::standard()
    }
}

/// `KL(N(mu_q, sd_q²) || N(mu_p, sd_p²))` in nats.
#[inline]
pub fn kl_normal(mu_q: f64, sd_q: f64, mu_p: f64, sd_p: f64) -> f64 {
    let d = mu_q - mu_p;
    log(sd_p / sd_q) + (sd_q * sd_q + d * d) / (2.0 * sd_p * sd_p) - 0.5
}

/// Sum of elementwise closed-form KL terms against a shared prior.
pub fn gaussian_kl<'a, I>(posteriors: I, prior: &GaussianPrior) -> f64
where
    I: IntoIterator<Item = &'a GaussianPosterior>,
{
    posteriors
        .into_iter()
        .map(|q| kl_normal(q.mu, q.sigma(), prior.mean, prior.std))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kl_examples() {
        assert_eq!(kl_normal(0.0, 1.0, 0.0, 1.0), 0.0);
        assert!((kl_normal(1.0, 1.0, 0.0, 1.0) - 0.5).abs() < 1e-15);
        // log 2 + (1/4 + 0)/2... against N(0, 2²): log(2) + 1/8 - 1/2
        let v = kl_normal(0.0, 1.0, 0.0, 2.0);
        assert!((v - (core::f64::consts::LN_2 + 0.125 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn sigma_round_trip() {
        let q = GaussianPosterior::from_mu_sigma(0.3, 0.05).unwrap();
        assert!((q.sigma() - 0.05).abs() < 1e-15);
        assert!(GaussianPosterior::from_mu_sigma(0.0, 0.0).is_err());
        assert!(GaussianPrior::new(0.0, -1.0).is_err());
    }
}
