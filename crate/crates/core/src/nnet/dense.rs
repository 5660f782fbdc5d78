use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;
use crate::matrix::{accumulate_outer, affine, backprop_input};
use crate::rng::{uniform, Stream};
use crate::{Error, Matrix, Result, Samples};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative, with the ReLU subgradient at 0 taken as 0.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    /// Half-width of the uniform fan-in initialisation.
    pub(crate) fn init_limit(self, fan_in: usize) -> f64 {
        let gain = match self {
            Activation::Relu => 6.0,
            Activation::Identity => 3.0,
        };
        sqrt(gain / fan_in.max(1) as f64)
    }
}

/// Point-estimate loss used for deterministic training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Loss {
    /// Mean absolute error averaged over rows and output channels.
    Mae,
    /// Mean squared error averaged over rows and output channels.
    Mse,
}

impl Loss {
    fn value_and_slope(self, residual: f64) -> (f64, f64) {
        match self {
            Loss::Mae => (residual.abs(), sign(residual)),
            Loss::Mse => (residual * residual, 2.0 * residual),
        }
    }

    pub fn evaluate(self, predictions: &Matrix, targets: &Matrix) -> f64 {
        let n = predictions.as_slice().len();
        let total: f64 = predictions
            .as_slice()
            .iter()
            .zip(targets.as_slice())
            .map(|(p, y)| self.value_and_slope(p - y).0)
            .sum();
        total / n as f64
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// One fully connected layer; `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(
        inputs: usize,
        outputs: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::invalid("layer widths must be positive"));
        }
        if weights.len() != inputs * outputs {
            return Err(Error::dims("layer weights", inputs * outputs, weights.len()));
        }
        if biases.len() != outputs {
            return Err(Error::dims("layer biases", outputs, biases.len()));
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("layer parameters".into()));
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            biases,
            activation,
        })
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }
}

/// Fully connected feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<DenseLayer>,
}

impl DenseNet {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("network layers"));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::dims("layer chain", pair[0].outputs, pair[1].inputs));
            }
        }
        Ok(Self { layers })
    }

    /// ReLU hidden layers and an identity output layer, with uniform fan-in
    /// initialisation and zero biases.
    pub fn init(input_width: usize, hidden: &[usize], output_width: usize, rng: &mut Stream) -> Result<Self> {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(input_width);
        widths.extend_from_slice(hidden);
        widths.push(output_width);
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for (k, pair) in widths.windows(2).enumerate() {
            let activation = if k + 2 == widths.len() {
                Activation::Identity
            } else {
                Activation::Relu
            };
            let limit = activation.init_limit(pair[0]);
            let mut layer = DenseLayer::zeros(pair[0], pair[1], activation);
            for w in &mut layer.weights {
                *w = uniform(rng, -limit, limit);
            }
            layers.push(layer);
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Forward pass for a single input vector.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_width() {
            return Err(Error::dims("network input", self.input_width(), x.len()));
        }
        let mut h = x.to_vec();
        for layer in &self.layers {
            let mut next = vec![0.0; layer.outputs];
            for (o, out) in next.iter_mut().enumerate() {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                let z = layer.biases[o] + crate::matrix::dot(row, &h);
                *out = layer.activation.apply(z);
            }
            h = next;
        }
        Ok(h)
    }

    /// Batched forward pass.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_width() {
            return Err(Error::dims("network input", self.input_width(), x.cols()));
        }
        let mut h = x.clone();
        for layer in &self.layers {
            h = affine(&h, &layer.weights, &layer.biases);
            if layer.activation != Activation::Identity {
                for v in h.as_mut_slice() {
                    *v = layer.activation.apply(*v);
                }
            }
        }
        Ok(h)
    }

    pub fn loss(&self, data: &Samples, loss: Loss) -> Result<f64> {
        Ok(loss.evaluate(&self.predict(&data.inputs)?, &data.targets))
    }

    /// Loss over `batch` and its gradient, grouped as `[w0, b0, w1, b1, ...]`.
    pub fn gradient(&self, batch: &Samples, loss: Loss) -> Result<(f64, Vec<Vec<f64>>)> {
        if batch.inputs.cols() != self.input_width() {
            return Err(Error::dims("network input", self.input_width(), batch.inputs.cols()));
        }
        if batch.targets.cols() != self.output_width() {
            return Err(Error::dims("network targets", self.output_width(), batch.targets.cols()));
        }
        if batch.is_empty() {
            return Err(Error::Empty("training batch"));
        }
        // activations[k] feeds layer k; pre[k] is layer k's pre-activation
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        activations.push(batch.inputs.clone());
        for layer in &self.layers {
            let z = affine(activations.last().unwrap(), &layer.weights, &layer.biases);
            let mut a = z.clone();
            for v in a.as_mut_slice() {
                *v = layer.activation.apply(*v);
            }
            pre.push(z);
            activations.push(a);
        }
        let out = activations.last().unwrap();
        let scale = 1.0 / out.as_slice().len() as f64;
        let mut value = 0.0;
        let mut delta = Matrix::zeros(out.rows(), out.cols());
        for ((d, p), y) in delta
            .as_mut_slice()
            .iter_mut()
            .zip(out.as_slice())
            .zip(batch.targets.as_slice())
        {
            let (v, s) = loss.value_and_slope(p - y);
            value += v;
            *d = s * scale;
        }
        let mut grads = vec![Vec::new(); 2 * self.layers.len()];
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            for (d, z) in delta.as_mut_slice().iter_mut().zip(pre[k].as_slice()) {
                *d *= layer.activation.derivative(*z);
            }
            let mut dw = vec![0.0; layer.weights.len()];
            accumulate_outer(&delta, &activations[k], &mut dw);
            let mut db = vec![0.0; layer.outputs];
            for r in delta.iter_rows() {
                crate::matrix::axpy(1.0, r, &mut db);
            }
            if k > 0 {
                delta = backprop_input(&delta, &layer.weights, layer.inputs);
            }
            grads[2 * k] = dw;
            grads[2 * k + 1] = db;
        }
        Ok((value * scale, grads))
    }

    /// Mutable parameter groups in the same order as [`DenseNet::gradient`].
    pub fn param_groups_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &mut self.layers {
            out.push(l.weights.as_mut_slice());
            out.push(l.biases.as_mut_slice());
        }
        out
    }

    pub(crate) fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }
}
