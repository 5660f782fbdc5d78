use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::layer::{LayerCache, LayerNoise, RealizedLayer, SamplingMode, VariationalLayer};
use super::posterior::{GaussianPrior, SIGMA_FLOOR};
use crate::math::{inv_softplus, log, sigmoid, softplus, LN_2PI};
use crate::nnet::{Activation, DenseNet};
use crate::rng::Stream;
use crate::{Error, Matrix, Result, Samples};

/// Initial posterior standard deviation as a fraction of the prior std.
pub(crate) const INIT_SIGMA_RATIO: f64 = 0.05;

/// Output head of a variational network.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Head {
    /// The last layer emits `[mu_1, s_1, mu_2, s_2, ...]` with `sigma = floor + softplus(s)`.
    Aleatoric,
    /// The last layer emits means only; every channel uses `sigma_fixed`.
    Epistemic { sigma_fixed: f64 },
}

impl Head {
    pub fn outputs_per_channel(self) -> usize {
        match self {
            Head::Aleatoric => 2,
            Head::Epistemic { .. } => 1,
        }
    }

    fn split(self, out: &Matrix, channels: usize) -> (Matrix, Matrix) {
        let rows = out.rows();
        let mut mu = Matrix::zeros(rows, channels);
        let mut sigma = Matrix::zeros(rows, channels);
        for r in 0..rows {
            let o = out.row(r);
            let (m, s) = (mu.row_mut(r), sigma.row_mut(r));
            match self {
                Head::Aleatoric => {
                    for c in 0..channels {
                        m[c] = o[2 * c];
                        s[c] = SIGMA_FLOOR + softplus(o[2 * c + 1]);
                    }
                }
                Head::Epistemic { sigma_fixed } => {
                    m.copy_from_slice(o);
                    s.fill(sigma_fixed);
                }
            }
        }
        (mu, sigma)
    }
}

/// Noise for every layer of one stochastic pass.
pub type NetNoise = Vec<LayerNoise>;

/// Variational network: hidden ReLU layers followed by an identity output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BnnNet {
    layers: Vec<VariationalLayer>,
    head: Head,
}

/// One posterior draw of every layer, usable as an ordinary network.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    layers: Vec<RealizedLayer>,
    head: Head,
    channels: usize,
}

impl Realization {
    /// Returns `(mu, sigma)`, each `rows x channels`.
    pub fn predict(&self, x: &Matrix) -> (Matrix, Matrix) {
        let mut h = self.layers[0].forward(x);
        for layer in &self.layers[1..] {
            h = layer.forward(&h);
        }
        self.head.split(&h, self.channels)
    }
}

impl BnnNet {
    pub fn new(layers: Vec<VariationalLayer>, head: Head) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::dims("layer chain", pair[0].outputs(), pair[1].inputs()));
            }
        }
        if let Head::Epistemic { sigma_fixed } = head {
            if !(sigma_fixed > 0.0 && sigma_fixed.is_finite()) {
                return Err(Error::invalid("sigma_fixed must be positive and finite"));
            }
        }
        let out = layers[layers.len() - 1].outputs();
        if out % head.outputs_per_channel() != 0 {
            return Err(Error::invalid(format!("output width {out} does not fit the head")));
        }
        Ok(Self { layers, head })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn init(
        input_width: usize,
        hidden: &[usize],
        channels: usize,
        head: Head,
        prior: GaussianPrior,
        sampling: SamplingMode,
        rng: &mut Stream,
    ) -> Result<Self> {
        if channels == 0 {
            return Err(Error::invalid("at least one output channel required"));
        }
        let mut widths = vec![input_width];
        widths.extend_from_slice(hidden);
        widths.push(channels * head.outputs_per_channel());
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for (i, pair) in widths.windows(2).enumerate() {
            let act = if i + 2 == widths.len() {
                Activation::Identity
            } else {
                Activation::Relu
            };
            layers.push(VariationalLayer::init(
                pair[0],
                pair[1],
                act,
                prior,
                sampling,
                INIT_SIGMA_RATIO,
                rng,
            )?);
        }
        if head == Head::Aleatoric {
            // Start every predicted sigma at 1 (one label std after scaling)
            // instead of letting random scale outputs produce near-zero sigmas.
            let last = layers.last_mut().expect("at least one layer");
            let inputs = last.inputs();
            let [w_mu, _, b_mu, _] = last.param_groups_mut();
            for c in 0..channels {
                let o = 2 * c + 1;
                w_mu[o * inputs..(o + 1) * inputs].fill(0.0);
                b_mu[o] = inv_softplus(1.0);
            }
        }
        Self::new(layers, head)
    }

    pub fn layers(&self) -> &[VariationalLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [VariationalLayer] {
        &mut self.layers
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn channels(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs() / self.head.outputs_per_channel()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(VariationalLayer::parameter_count).sum()
    }

    pub fn set_sampling(&mut self, mode: SamplingMode) {
        for l in &mut self.layers {
            l.set_sampling(mode);
        }
    }

    pub fn kl(&self) -> f64 {
        self.layers.iter().map(VariationalLayer::kl).sum()
    }

    pub fn sample_noise(&self, rows: usize, rng: &mut Stream) -> NetNoise {
        self.layers.iter().map(|l| l.sample_noise(rows, rng)).collect()
    }

    pub fn zero_noise(&self, rows: usize) -> NetNoise {
        self.layers.iter().map(|l| l.zero_noise(rows)).collect()
    }

    pub fn sample_realization(&self, rng: &mut Stream) -> Realization {
        Realization {
            layers: self.layers.iter().map(|l| l.sample_weights(rng)).collect(),
            head: self.head,
            channels: self.channels(),
        }
    }

    /// Realisation at fixed noise (shared across rows).
    pub fn realize(&self, noise: &NetNoise) -> Realization {
        Realization {
            layers: self.layers.iter().zip(noise).map(|(l, n)| l.realize(n)).collect(),
            head: self.head,
            channels: self.channels(),
        }
    }

    /// Deterministic network at the posterior means (the raw output layer, head not applied).
    pub fn posterior_mean_net(&self) -> DenseNet {
        DenseNet::new(self.layers.iter().map(VariationalLayer::posterior_mean).collect())
            .expect("chain validated on construction")
    }

    /// One stochastic forward pass of a single input vector.
    pub fn forward_sample(&self, x: &[f64], rng: &mut Stream) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_width(x.len())?;
        let xm = Matrix::from_vec(1, x.len(), x.to_vec())?;
        let (mu, sigma) = self.sample_realization(rng).predict(&xm);
        Ok((mu.into_vec(), sigma.into_vec()))
    }

    fn check_width(&self, got: usize) -> Result<()> {
        if got != self.input_width() {
            return Err(Error::dims("input width", self.input_width(), got));
        }
        Ok(())
    }

    fn check_batch(&self, batch: &Samples) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        self.check_width(batch.inputs.cols())?;
        if batch.targets.cols() != self.channels() {
            return Err(Error::dims("target channels", self.channels(), batch.targets.cols()));
        }
        Ok(())
    }

    /// Stochastic forward pass over a batch with explicit noise.
    pub fn forward_with_noise(&self, x: &Matrix, noise: &NetNoise) -> Result<(Matrix, Matrix)> {
        self.check_width(x.cols())?;
        self.check_noise(x.rows(), noise)?;
        let (out, _) = self.forward_cached(x, noise);
        Ok(self.head.split(&out, self.channels()))
    }

    fn check_noise(&self, rows: usize, noise: &NetNoise) -> Result<()> {
        if noise.len() != self.layers.len() {
            return Err(Error::dims("noise layers", self.layers.len(), noise.len()));
        }
        for (l, n) in self.layers.iter().zip(noise) {
            if n.weight_eps.len() != l.inputs() * l.outputs() || n.bias_eps.len() != l.outputs() {
                return Err(Error::dims("noise size", l.inputs() * l.outputs(), n.weight_eps.len()));
            }
            if let Some((s_in, s_out)) = &n.signs {
                if s_in.rows() != rows || s_out.rows() != rows {
                    return Err(Error::dims("flipout sign rows", rows, s_in.rows()));
                }
            }
        }
        Ok(())
    }

    fn forward_cached(&self, x: &Matrix, noise: &NetNoise) -> (Matrix, Vec<LayerCache>) {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (layer, n) in self.layers.iter().zip(noise) {
            let (next, cache) = layer.forward_train(&h, n);
            caches.push(cache);
            h = next;
        }
        (h, caches)
    }

    /// `kl_weight · KL − Σ log N(y; mu, sigma)` over rows and channels, for fixed noise.
    pub fn loss_with_noise(&self, batch: &Samples, noise: &NetNoise, kl_weight: f64) -> Result<f64> {
        self.check_batch(batch)?;
        self.check_noise(batch.len(), noise)?;
        let (out, _) = self.forward_cached(&batch.inputs, noise);
        let (mu, sigma) = self.head.split(&out, self.channels());
        let nll = negative_log_likelihood(&mu, &sigma, &batch.targets);
        finite_loss(nll + kl_weight * self.kl())
    }

    /// Single-sample negative ELBO with fresh noise drawn from `rng`.
    pub fn elbo_loss(&self, batch: &Samples, rng: &mut Stream, kl_weight: f64) -> Result<f64> {
        let noise = self.sample_noise(batch.len(), rng);
        self.loss_with_noise(batch, &noise, kl_weight)
    }

    /// Loss and gradients for fixed noise. Gradient groups per layer are
    /// `[weight_mu, weight_rho, bias_mu, bias_rho]`.
    pub fn loss_and_grad(
        &self,
        batch: &Samples,
        noise: &NetNoise,
        kl_weight: f64,
    ) -> Result<(f64, Vec<Vec<f64>>)> {
        self.check_batch(batch)?;
        self.check_noise(batch.len(), noise)?;
        let channels = self.channels();
        let (out, caches) = self.forward_cached(&batch.inputs, noise);
        let (mu, sigma) = self.head.split(&out, channels);
        let nll = negative_log_likelihood(&mu, &sigma, &batch.targets);
        let loss = finite_loss(nll + kl_weight * self.kl())?;

        let mut d_out = Matrix::zeros(out.rows(), out.cols());
        for r in 0..out.rows() {
            let (m, s, y, raw) = (mu.row(r), sigma.row(r), batch.targets.row(r), out.row(r));
            let d = d_out.row_mut(r);
            for c in 0..channels {
                let res = y[c] - m[c];
                let var = s[c] * s[c];
                match self.head {
                    Head::Aleatoric => {
                        d[2 * c] = -res / var;
                        let d_sigma = 1.0 / s[c] - res * res / (var * s[c]);
                        d[2 * c + 1] = d_sigma * sigmoid(raw[2 * c + 1]);
                    }
                    Head::Epistemic { .. } => d[c] = -res / var,
                }
            }
        }

        let mut grads: Vec<Vec<f64>> = Vec::with_capacity(4 * self.layers.len());
        let mut per_layer: Vec<[Vec<f64>; 4]> = Vec::with_capacity(self.layers.len());
        let mut upstream = d_out;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (g, d_in) = layer.backward(&caches[i], &noise[i], upstream, i > 0);
            per_layer.push(g);
            upstream = d_in.unwrap_or_else(|| Matrix::zeros(0, 0));
        }
        per_layer.reverse();
        for (layer, g) in self.layers.iter().zip(per_layer) {
            let mut g: Vec<Vec<f64>> = g.into_iter().collect();
            if kl_weight != 0.0 {
                layer.add_kl_gradient(kl_weight, &mut g);
            }
            grads.extend(g);
        }
        Ok((loss, grads))
    }

    pub fn param_groups_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| l.param_groups_mut()).collect()
    }

    pub(crate) fn all_finite(&self) -> bool {
        self.layers.iter().all(VariationalLayer::all_finite)
    }
}

fn negative_log_likelihood(mu: &Matrix, sigma: &Matrix, y: &Matrix) -> f64 {
    let mut total = 0.0;
    for ((&m, &s), &t) in mu.as_slice().iter().zip(sigma.as_slice()).zip(y.as_slice()) {
        let z = (t - m) / s;
        total += 0.5 * LN_2PI + log(s) + 0.5 * z * z;
    }
    total
}

fn finite_loss(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("negative ELBO evaluated to {v}")))
    }
}
