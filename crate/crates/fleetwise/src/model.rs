//! Versioned JSON documents for trained networks and their scalers.

use std::fmt;
use std::str::FromStr;

use fleetwise_core::bnn::{BnnNet, GaussianPrior, Head, SamplingMode, VariationalLayer};
use fleetwise_core::data::{InputConfig, Scaler};
use fleetwise_core::nnet::{Activation, DenseLayer, DenseNet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// The three network variants compared throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dnn,
    EpistemicBnn,
    AleatoricBnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Dnn, ModelKind::EpistemicBnn, ModelKind::AleatoricBnn];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Dnn => "dnn",
            ModelKind::EpistemicBnn => "epistemic_bnn",
            ModelKind::AleatoricBnn => "aleatoric_bnn",
        }
    }

    pub fn is_bayesian(self) -> bool {
        self != ModelKind::Dnn
    }

    pub(crate) fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    /// Accepts `dnn`, `epistemic_bnn`, `aleatoric_bnn` (dashes allowed) and
    /// `bnn` as shorthand for the aleatoric variant.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "dnn" => Ok(ModelKind::Dnn),
            "epistemic_bnn" | "epistemic" => Ok(ModelKind::EpistemicBnn),
            "aleatoric_bnn" | "aleatoric" | "bnn" => Ok(ModelKind::AleatoricBnn),
            other => Err(Error::Usage(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Removes repeated kinds, keeping first occurrences in order.
pub fn dedup_kinds(kinds: &[ModelKind]) -> Vec<ModelKind> {
    let mut out = Vec::new();
    for &k in kinds {
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayerDoc {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNetDoc {
    pub schema_version: u32,
    pub layers: Vec<DenseLayerDoc>,
}

impl From<&DenseNet> for DenseNetDoc {
    fn from(net: &DenseNet) -> Self {
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            layers: net
                .layers()
                .iter()
                .map(|l| DenseLayerDoc {
                    inputs: l.inputs(),
                    outputs: l.outputs(),
                    activation: l.activation(),
                    weights: l.weights().to_vec(),
                    biases: l.biases().to_vec(),
                })
                .collect(),
        }
    }
}

impl DenseNetDoc {
    pub fn to_net(&self) -> Result<DenseNet> {
        check_version(self.schema_version)?;
        let layers = self
            .layers
            .iter()
            .map(|l| DenseLayer::new(l.inputs, l.outputs, l.weights.clone(), l.biases.clone(), l.activation))
            .collect::<fleetwise_core::Result<Vec<_>>>()?;
        Ok(DenseNet::new(layers)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalLayerDoc {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub weight_mu: Vec<f64>,
    pub weight_rho: Vec<f64>,
    pub bias_mu: Vec<f64>,
    pub bias_rho: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnnNetDoc {
    pub schema_version: u32,
    pub head: Head,
    pub prior: GaussianPrior,
    pub sampling_mode: SamplingMode,
    pub layers: Vec<VariationalLayerDoc>,
}

impl From<&BnnNet> for BnnNetDoc {
    fn from(net: &BnnNet) -> Self {
        let first = &net.layers()[0];
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            head: net.head(),
            prior: first.prior(),
            sampling_mode: first.sampling(),
            layers: net
                .layers()
                .iter()
                .map(|l| VariationalLayerDoc {
                    inputs: l.inputs(),
                    outputs: l.outputs(),
                    activation: l.activation(),
                    weight_mu: l.weight_mu().to_vec(),
                    weight_rho: l.weight_rho().to_vec(),
                    bias_mu: l.bias_mu().to_vec(),
                    bias_rho: l.bias_rho().to_vec(),
                })
                .collect(),
        }
    }
}

impl BnnNetDoc {
    pub fn to_net(&self) -> Result<BnnNet> {
        check_version(self.schema_version)?;
        let layers = self
            .layers
            .iter()
            .map(|l| {
                VariationalLayer::new(
                    l.inputs,
                    l.outputs,
                    l.weight_mu.clone(),
                    l.weight_rho.clone(),
                    l.bias_mu.clone(),
                    l.bias_rho.clone(),
                    self.prior,
                    l.activation,
                    self.sampling_mode,
                )
            })
            .collect::<fleetwise_core::Result<Vec<_>>>()?;
        Ok(BnnNet::new(layers, self.head)?)
    }
}

fn check_version(v: u32) -> Result<()> {
    if v != MODEL_SCHEMA_VERSION {
        return Err(Error::invalid(format!(
            "unsupported model schema version {v} (expected {MODEL_SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetworkDoc {
    Dnn(DenseNetDoc),
    Bnn(BnnNetDoc),
}

/// A trained network together with everything needed to apply it to raw data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub schema_version: u32,
    pub kind: ModelKind,
    pub input_config: InputConfig,
    pub input_columns: Vec<String>,
    pub label_columns: Vec<String>,
    pub input_scaler: Scaler,
    pub label_scaler: Scaler,
    /// Turbine whose data trained the model.
    pub trained_on: String,
    pub training_rows: usize,
    pub seed: u64,
    pub network: NetworkDoc,
}

/// A deserialized network ready for inference.
#[derive(Debug, Clone)]
pub enum Network {
    Dnn(DenseNet),
    Bnn(BnnNet),
}

impl ModelBundle {
    pub fn network(&self) -> Result<Network> {
        check_version(self.schema_version)?;
        let net = match &self.network {
            NetworkDoc::Dnn(d) => Network::Dnn(d.to_net()?),
            NetworkDoc::Bnn(d) => Network::Bnn(d.to_net()?),
        };
        let (input_width, channels) = match &net {
            Network::Dnn(n) => (n.input_width(), n.output_width()),
            Network::Bnn(n) => (n.input_width(), n.channels()),
        };
        let kind = match &net {
            Network::Dnn(_) => ModelKind::Dnn,
            Network::Bnn(n) if n.head() == Head::Aleatoric => ModelKind::AleatoricBnn,
            Network::Bnn(_) => ModelKind::EpistemicBnn,
        };
        if kind != self.kind {
            return Err(Error::invalid(format!("model declares kind {} but stores a {kind} network", self.kind)));
        }
        if input_width != self.input_columns.len() || self.input_scaler.names != self.input_columns {
            return Err(Error::invalid("model input width does not match its input columns"));
        }
        if channels != self.label_columns.len() || self.label_scaler.names != self.label_columns {
            return Err(Error::invalid("model output width does not match its label columns"));
        }
        Ok(net)
    }

    pub fn bnn(&self) -> Result<BnnNet> {
        match self.network()? {
            Network::Bnn(n) => Ok(n),
            Network::Dnn(_) => Err(Error::invalid("expected a Bayesian model, found a deterministic one")),
        }
    }

    pub fn dnn(&self) -> Result<DenseNet> {
        match self.network()? {
            Network::Dnn(n) => Ok(n),
            Network::Bnn(_) => Err(Error::invalid("expected a deterministic model, found a Bayesian one")),
        }
    }
}
