use alloc::vec;
use alloc::vec::Vec;

use super::posterior::{kl_normal, rho_for_sigma, GaussianPosterior, GaussianPrior, SIGMA_FLOOR};
use crate::math::{sigmoid, softplus};
use crate::matrix::{accumulate_outer, affine, axpy, backprop_input};
use crate::nnet::{Activation, DenseLayer};
use crate::rng::{fill_normal, fill_signs, uniform, Stream};
use crate::{Error, Matrix, Result};

/// How weight noise is shared across the rows of a training batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SamplingMode {
    /// One weight draw shared by every row.
    SharedEps,
    /// One base draw, decorrelated per row with random sign flips.
    Flipout,
}

/// Dense layer with a factorised Gaussian posterior over weights and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalLayer {
    inputs: usize,
    outputs: usize,
    weight_mu: Vec<f64>,
    weight_rho: Vec<f64>,
    bias_mu: Vec<f64>,
    bias_rho: Vec<f64>,
    prior: GaussianPrior,
    activation: Activation,
    sampling: SamplingMode,
}

/// Standard-normal noise for one layer plus the flipout sign matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNoise {
    pub weight_eps: Vec<f64>,
    pub bias_eps: Vec<f64>,
    /// `rows x inputs` and `rows x outputs` Rademacher signs (flipout only).
    pub signs: Option<(Matrix, Matrix)>,
}

/// A concrete weight/bias draw.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedLayer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl RealizedLayer {
    pub(crate) fn forward(&self, x: &Matrix) -> Matrix {
        let mut z = affine(x, &self.weights, &self.biases);
        if self.activation != Activation::Identity {
            for v in z.as_mut_slice() {
                *v = self.activation.apply(*v);
            }
        }
        z
    }
}

pub(crate) struct LayerCache {
    input: Matrix,
    pre: Matrix,
    /// σ∘ε for the weights (flipout) or the realised weights (shared).
    weights: Vec<f64>,
    /// flipout: input ∘ S
    signed_input: Option<Matrix>,
}

impl VariationalLayer {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        inputs: usize,
        outputs: usize,
        weight_mu: Vec<f64>,
        weight_rho: Vec<f64>,
        bias_mu: Vec<f64>,
        bias_rho: Vec<f64>,
        prior: GaussianPrior,
        activation: Activation,
        sampling: SamplingMode,
    ) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::invalid("layer widths must be positive"));
        }
        for (name, len, want) in [
            ("weight mu", weight_mu.len(), inputs * outputs),
            ("weight rho", weight_rho.len(), inputs * outputs),
            ("bias mu", bias_mu.len(), outputs),
            ("bias rho", bias_rho.len(), outputs),
        ] {
            if len != want {
                return Err(Error::dims(name, want, len));
            }
        }
        if weight_mu
            .iter()
            .chain(&weight_rho)
            .chain(&bias_mu)
            .chain(&bias_rho)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("variational parameters".into()));
        }
        let prior = GaussianPrior::new(prior.mean, prior.std)?;
        Ok(Self {
            inputs,
            outputs,
            weight_mu,
            weight_rho,
            bias_mu,
            bias_rho,
            prior,
            activation,
            sampling,
        })
    }

    /// Means from uniform fan-in initialisation (zero for biases) and every
    /// standard deviation at `init_sigma_ratio · prior.std`.
    pub fn init(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        prior: GaussianPrior,
        sampling: SamplingMode,
        init_sigma_ratio: f64,
        rng: &mut Stream,
    ) -> Result<Self> {
        let sigma = init_sigma_ratio * prior.std;
        if !(sigma > SIGMA_FLOOR) {
            return Err(Error::invalid("initial posterior sigma must exceed the floor"));
        }
        let rho = rho_for_sigma(sigma);
        let limit = activation.init_limit(inputs);
        let weight_mu = (0..inputs * outputs).map(|_| uniform(rng, -limit, limit)).collect();
        Self::new(
            inputs,
            outputs,
            weight_mu,
            vec![rho; inputs * outputs],
            vec![0.0; outputs],
            vec![rho; outputs],
            prior,
            activation,
            sampling,
        )
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn prior(&self) -> GaussianPrior {
        self.prior
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn sampling(&self) -> SamplingMode {
        self.sampling
    }

    pub fn set_sampling(&mut self, mode: SamplingMode) {
        self.sampling = mode;
    }

    pub fn weight_mu(&self) -> &[f64] {
        &self.weight_mu
    }

    pub fn weight_rho(&self) -> &[f64] {
        &self.weight_rho
    }

    pub fn bias_mu(&self) -> &[f64] {
        &self.bias_mu
    }

    pub fn bias_rho(&self) -> &[f64] {
        &self.bias_rho
    }

    pub fn weight_posterior(&self, out: usize, inp: usize) -> GaussianPosterior {
        let k = out * self.inputs + inp;
        GaussianPosterior {
            mu: self.weight_mu[k],
            rho: self.weight_rho[k],
        }
    }

    pub fn bias_posterior(&self, out: usize) -> GaussianPosterior {
        GaussianPosterior {
            mu: self.bias_mu[out],
            rho: self.bias_rho[out],
        }
    }

    pub fn posteriors(&self) -> impl Iterator<Item = GaussianPosterior> + '_ {
        let w = self.weight_mu.iter().zip(&self.weight_rho);
        let b = self.bias_mu.iter().zip(&self.bias_rho);
        w.chain(b).map(|(&mu, &rho)| GaussianPosterior { mu, rho })
    }

    pub fn parameter_count(&self) -> usize {
        self.weight_mu.len() + self.bias_mu.len()
    }

    /// Closed-form KL of all weights and biases against the prior.
    pub fn kl(&self) -> f64 {
        let p = self.prior;
        self.posteriors()
            .map(|q| kl_normal(q.mu, q.sigma(), p.mean, p.std))
            .sum()
    }

    pub fn sample_noise(&self, rows: usize, rng: &mut Stream) -> LayerNoise {
        let mut weight_eps = vec![0.0; self.weight_mu.len()];
        let mut bias_eps = vec![0.0; self.outputs];
        fill_normal(rng, &mut weight_eps);
        fill_normal(rng, &mut bias_eps);
        let signs = match self.sampling {
            SamplingMode::SharedEps => None,
            SamplingMode::Flipout => {
                let mut s_in = Matrix::zeros(rows, self.inputs);
                let mut s_out = Matrix::zeros(rows, self.outputs);
                fill_signs(rng, s_in.as_mut_slice());
                fill_signs(rng, s_out.as_mut_slice());
                Some((s_in, s_out))
            }
        };
        LayerNoise {
            weight_eps,
            bias_eps,
            signs,
        }
    }

    pub fn zero_noise(&self, rows: usize) -> LayerNoise {
        LayerNoise {
            weight_eps: vec![0.0; self.weight_mu.len()],
            bias_eps: vec![0.0; self.outputs],
            signs: match self.sampling {
                SamplingMode::SharedEps => None,
                SamplingMode::Flipout => {
                    let mut s_in = Matrix::zeros(rows, self.inputs);
                    let mut s_out = Matrix::zeros(rows, self.outputs);
                    s_in.as_mut_slice().fill(1.0);
                    s_out.as_mut_slice().fill(1.0);
                    Some((s_in, s_out))
                }
            },
        }
    }

    /// `theta = mu + sigma · eps` for the given noise.
    pub fn realize(&self, noise: &LayerNoise) -> RealizedLayer {
        RealizedLayer {
            weights: reparameterize(&self.weight_mu, &self.weight_rho, &noise.weight_eps),
            biases: reparameterize(&self.bias_mu, &self.bias_rho, &noise.bias_eps),
            activation: self.activation,
        }
    }

    /// Draws one realisation of every weight and bias.
    pub fn sample_weights(&self, rng: &mut Stream) -> RealizedLayer {
        let mut weight_eps = vec![0.0; self.weight_mu.len()];
        let mut bias_eps = vec![0.0; self.outputs];
        fill_normal(rng, &mut weight_eps);
        fill_normal(rng, &mut bias_eps);
        RealizedLayer {
            weights: reparameterize(&self.weight_mu, &self.weight_rho, &weight_eps),
            biases: reparameterize(&self.bias_mu, &self.bias_rho, &bias_eps),
            activation: self.activation,
        }
    }

    /// Layer at the posterior means.
    pub fn posterior_mean(&self) -> DenseLayer {
        DenseLayer::new(
            self.inputs,
            self.outputs,
            self.weight_mu.clone(),
            self.bias_mu.clone(),
            self.activation,
        )
        .expect("validated on construction")
    }

    /// Stochastic forward pass; returns the activated output and the cache for backprop.
    pub(crate) fn forward_train(&self, x: &Matrix, noise: &LayerNoise) -> (Matrix, LayerCache) {
        let biases = reparameterize(&self.bias_mu, &self.bias_rho, &noise.bias_eps);
        let (pre, weights, signed_input) = match &noise.signs {
            None => {
                let w = reparameterize(&self.weight_mu, &self.weight_rho, &noise.weight_eps);
                (affine(x, &w, &biases), w, None)
            }
            Some((s_in, s_out)) => {
                let delta: Vec<f64> = self
                    .weight_rho
                    .iter()
                    .zip(&noise.weight_eps)
                    .map(|(&rho, &e)| (SIGMA_FLOOR + softplus(rho)) * e)
                    .collect();
                let mut z = affine(x, &self.weight_mu, &biases);
                let mut xs = x.clone();
                hadamard(&mut xs, s_in);
                let zero = vec![0.0; self.outputs];
                let mut pert = affine(&xs, &delta, &zero);
                hadamard(&mut pert, s_out);
                for (a, b) in z.as_mut_slice().iter_mut().zip(pert.as_slice()) {
                    *a += b;
                }
                (z, delta, Some(xs))
            }
        };
        let mut out = pre.clone();
        if self.activation != Activation::Identity {
            for v in out.as_mut_slice() {
                *v = self.activation.apply(*v);
            }
        }
        (
            out,
            LayerCache {
                input: x.clone(),
                pre,
                weights,
                signed_input,
            },
        )
    }

    /// Backpropagates `d_out` (gradient w.r.t. the activated output).
    ///
    /// Returns `[d weight_mu, d weight_rho, d bias_mu, d bias_rho]` and,
    /// when requested, the gradient w.r.t. the layer input.
    pub(crate) fn backward(
        &self,
        cache: &LayerCache,
        noise: &LayerNoise,
        mut d_out: Matrix,
        need_input_grad: bool,
    ) -> ([Vec<f64>; 4], Option<Matrix>) {
        for (d, z) in d_out.as_mut_slice().iter_mut().zip(cache.pre.as_slice()) {
            *d *= self.activation.derivative(*z);
        }
        let dz = d_out;
        let mut d_mu = vec![0.0; self.weight_mu.len()];
        accumulate_outer(&dz, &cache.input, &mut d_mu);
        let (d_rho, d_input) = match (&noise.signs, &cache.signed_input) {
            (Some((s_in, s_out)), Some(xs)) => {
                let mut dz_r = dz.clone();
                hadamard(&mut dz_r, s_out);
                let mut d_delta = vec![0.0; self.weight_mu.len()];
                accumulate_outer(&dz_r, xs, &mut d_delta);
                let d_rho = chain_rho(&d_delta, &self.weight_rho, &noise.weight_eps);
                let d_input = need_input_grad.then(|| {
                    let mut dx = backprop_input(&dz, &self.weight_mu, self.inputs);
                    let mut dx_pert = backprop_input(&dz_r, &cache.weights, self.inputs);
                    hadamard(&mut dx_pert, s_in);
                    for (a, b) in dx.as_mut_slice().iter_mut().zip(dx_pert.as_slice()) {
                        *a += b;
                    }
                    dx
                });
                (d_rho, d_input)
            }
            _ => {
                let d_rho = chain_rho(&d_mu, &self.weight_rho, &noise.weight_eps);
                let d_input = need_input_grad.then(|| backprop_input(&dz, &cache.weights, self.inputs));
                (d_rho, d_input)
            }
        };
        let mut d_bias_mu = vec![0.0; self.outputs];
        for r in dz.iter_rows() {
            axpy(1.0, r, &mut d_bias_mu);
        }
        let d_bias_rho = chain_rho(&d_bias_mu, &self.bias_rho, &noise.bias_eps);
        ([d_mu, d_rho, d_bias_mu, d_bias_rho], d_input)
    }

    /// Adds `weight · ∂KL/∂(mu, rho)` into the gradient groups.
    pub(crate) fn add_kl_gradient(&self, weight: f64, grads: &mut [Vec<f64>]) {
        let p = self.prior;
        let inv_var = 1.0 / (p.std * p.std);
        let apply = |mu: &[f64], rho: &[f64], g_mu: &mut Vec<f64>, g_rho: &mut Vec<f64>| {
            for i in 0..mu.len() {
                let sigma = SIGMA_FLOOR + softplus(rho[i]);
                g_mu[i] += weight * (mu[i] - p.mean) * inv_var;
                g_rho[i] += weight * (sigma * inv_var - 1.0 / sigma) * sigmoid(rho[i]);
            }
        };
        let (w, b) = grads.split_at_mut(2);
        let (gw_mu, gw_rho) = w.split_at_mut(1);
        apply(&self.weight_mu, &self.weight_rho, &mut gw_mu[0], &mut gw_rho[0]);
        let (gb_mu, gb_rho) = b.split_at_mut(1);
        apply(&self.bias_mu, &self.bias_rho, &mut gb_mu[0], &mut gb_rho[0]);
    }

    pub(crate) fn param_groups_mut(&mut self) -> [&mut [f64]; 4] {
        [
            &mut self.weight_mu,
            &mut self.weight_rho,
            &mut self.bias_mu,
            &mut self.bias_rho,
        ]
    }

    pub(crate) fn all_finite(&self) -> bool {
        self.weight_mu
            .iter()
            .chain(&self.weight_rho)
            .chain(&self.bias_mu)
            .chain(&self.bias_rho)
            .all(|v| v.is_finite())
    }
}

fn reparameterize(mu: &[f64], rho: &[f64], eps: &[f64]) -> Vec<f64> {
    mu.iter()
        .zip(rho)
        .zip(eps)
        .map(|((&m, &r), &e)| m + (SIGMA_FLOOR + softplus(r)) * e)
        .collect()
}

fn chain_rho(d_theta: &[f64], rho: &[f64], eps: &[f64]) -> Vec<f64> {
    d_theta
        .iter()
        .zip(rho)
        .zip(eps)
        .map(|((&g, &r), &e)| g * e * sigmoid(r))
        .collect()
}

fn hadamard(a: &mut Matrix, b: &Matrix) {
    for (x, y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
        *x *= y;
    }
}
