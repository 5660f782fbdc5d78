use alloc::vec;
use alloc::vec::Vec;

use super::net::BnnNet;
use crate::rng::stream;
use crate::{Error, Matrix, Result};

/// Forward runs per prediction used unless overridden.
pub const DEFAULT_FORWARD_RUNS: usize = 10_000;

const ENSEMBLE_TAG: u64 = 0x454e_5345;

/// `n_f` predictive draws of `(mu, sigma)` for every row and channel.
///
/// Values are stored at `[(row * n_f + s) * channels + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveSampleSet {
    rows: usize,
    channels: usize,
    n_f: usize,
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

impl PredictiveSampleSet {
    pub fn new(rows: usize, channels: usize, n_f: usize, mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if n_f == 0 {
            return Err(Error::invalid("at least one forward run required"));
        }
        if channels == 0 {
            return Err(Error::invalid("at least one channel required"));
        }
        let len = rows * channels * n_f;
        if mu.len() != len {
            return Err(Error::dims("sample means", len, mu.len()));
        }
        if sigma.len() != len {
            return Err(Error::dims("sample sigmas", len, sigma.len()));
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("predictive mean sample".into()));
        }
        if sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::invalid("predictive sigma samples must be positive and finite"));
        }
        Ok(Self {
            rows,
            channels,
            n_f,
            mu,
            sigma,
        })
    }

    /// A set holding one draw per row, e.g. from a single realisation.
    pub fn from_single(mu: &Matrix, sigma: &Matrix) -> Result<Self> {
        if mu.rows() != sigma.rows() || mu.cols() != sigma.cols() {
            return Err(Error::dims("sigma shape", mu.rows() * mu.cols(), sigma.rows() * sigma.cols()));
        }
        Self::new(mu.rows(), mu.cols(), 1, mu.as_slice().to_vec(), sigma.as_slice().to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn n_f(&self) -> usize {
        self.n_f
    }

    pub fn mu(&self, row: usize, sample: usize, channel: usize) -> f64 {
        self.mu[(row * self.n_f + sample) * self.channels + channel]
    }

    pub fn sigma(&self, row: usize, sample: usize, channel: usize) -> f64 {
        self.sigma[(row * self.n_f + sample) * self.channels + channel]
    }

    /// The `n_f` mean draws of one row and channel.
    pub fn mu_draws(&self, row: usize, channel: usize) -> Vec<f64> {
        (0..self.n_f).map(|s| self.mu(row, s, channel)).collect()
    }

    pub fn sigma_draws(&self, row: usize, channel: usize) -> Vec<f64> {
        (0..self.n_f).map(|s| self.sigma(row, s, channel)).collect()
    }

    /// Applies `y -> offset + scale * y` per channel to means and sigmas.
    pub fn rescaled(&self, offset: &[f64], scale: &[f64]) -> Result<Self> {
        if offset.len() != self.channels || scale.len() != self.channels {
            return Err(Error::dims("rescale channels", self.channels, offset.len()));
        }
        if scale.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid("rescale factors must be positive"));
        }
        let mut mu = self.mu.clone();
        let mut sigma = self.sigma.clone();
        for (i, (m, s)) in mu.iter_mut().zip(sigma.iter_mut()).enumerate() {
            let c = i % self.channels;
            *m = offset[c] + scale[c] * *m;
            *s *= scale[c];
        }
        Self::new(self.rows, self.channels, self.n_f, mu, sigma)
    }
}

/// Streams `n_f` posterior draws over `inputs`.
///
/// Draw `s` realises every weight once from its own substream of `seed` and
/// applies that realisation to all rows, so the result does not depend on
/// evaluation order. The callback receives `(s, mu, sigma)` with both
/// matrices `rows x channels`.
pub fn ensemble_fold<F>(net: &BnnNet, inputs: &Matrix, n_f: usize, seed: u64, mut f: F) -> Result<()>
where
    F: FnMut(usize, &Matrix, &Matrix),
{
    if n_f == 0 {
        return Err(Error::invalid("at least one forward run required"));
    }
    if inputs.cols() != net.input_width() {
        return Err(Error::dims("input width", net.input_width(), inputs.cols()));
    }
    for s in 0..n_f {
        let mut rng = stream(seed, &[ENSEMBLE_TAG, s as u64]);
        let (mu, sigma) = net.sample_realization(&mut rng).predict(inputs);
        f(s, &mu, &sigma);
    }
    Ok(())
}

/// Collects `n_f` draws per row into a [`PredictiveSampleSet`].
pub fn predictive_ensemble(net: &BnnNet, inputs: &Matrix, n_f: usize, seed: u64) -> Result<PredictiveSampleSet> {
    let rows = inputs.rows();
    let channels = net.channels();
    let mut mu = vec![0.0; rows * n_f * channels];
    let mut sigma = vec![0.0; rows * n_f * channels];
    ensemble_fold(net, inputs, n_f, seed, |s, m, sd| {
        for r in 0..rows {
            let at = (r * n_f + s) * channels;
            mu[at..at + channels].copy_from_slice(m.row(r));
            sigma[at..at + channels].copy_from_slice(sd.row(r));
        }
    })?;
    PredictiveSampleSet::new(rows, channels, n_f, mu, sigma)
}
