use fleetwise_core::bnn::{bnn_train, ensemble_fold, BnnNet, BnnTrainOptions, WeightStatHistory};
use fleetwise_core::data::schema::LABEL_COLUMNS;
use fleetwise_core::data::{split, Dataset, InputConfig, Scaler};
use fleetwise_core::metrics::{point_errors_by_channel, EnsembleAccumulator, PointErrors, UncertaintyDecomposition};
use fleetwise_core::nnet::{mlp_train, DenseNet, TrainHistory};
use fleetwise_core::rng::{derive_seed, stream};
use fleetwise_core::Matrix;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::model::{BnnNetDoc, DenseNetDoc, ModelBundle, ModelKind, Network, NetworkDoc, MODEL_SCHEMA_VERSION};

const INIT_TAG: u64 = 0x494e_4954;
const TRAIN_TAG: u64 = 0x5452_4e47;
const HOLDOUT_TAG: u64 = 0x484f_4c44;

/// A trained model with its training record.
#[derive(Debug, Clone)]
pub struct Trained {
    pub bundle: ModelBundle,
    pub network: Network,
    pub history: TrainHistory,
    /// Posterior trace of the tracked output bias (variational kinds only).
    pub weight_stats: Option<WeightStatHistory>,
}

fn label_names() -> Vec<String> {
    LABEL_COLUMNS.iter().map(|s| s.to_string()).collect()
}

/// Fits scalers on `train` and trains one network of `kind` on `input` columns.
///
/// Inputs and labels are z-scored with statistics of `train`. The
/// deterministic network holds out `dnn.validation_fraction` of the rows to
/// monitor validation loss; the variational kinds use every row.
pub fn train_model(train: &Dataset, kind: ModelKind, input: InputConfig, cfg: &Config, seed: u64) -> Result<Trained> {
    let inputs = input.columns();
    let labels = label_names();
    if let Some(missing) = inputs.iter().chain(&labels).find(|c| !train.has_column(c)) {
        return Err(Error::invalid(format!(
            "{}: missing column `{missing}` needed by input configuration {}",
            train.turbine_id(),
            input.id()
        )));
    }
    if train.len() < 2 {
        return Err(Error::invalid(format!("{}: too few training rows", train.turbine_id())));
    }
    let input_scaler = Scaler::fit(train, &inputs)?;
    let label_scaler = Scaler::fit(train, &labels)?;
    let scaled = label_scaler.apply(&input_scaler.apply(train)?)?;
    let model_seed = derive_seed(seed, &[kind.tag(), u64::from(input.id())]);
    let mut init = stream(model_seed, &[INIT_TAG]);
    let train_seed = derive_seed(model_seed, &[TRAIN_TAG]);

    let (network, doc, history, weight_stats) = match kind {
        ModelKind::Dnn => {
            let parts = split(&scaled, &[1.0 - cfg.dnn.validation_fraction, cfg.dnn.validation_fraction], derive_seed(model_seed, &[HOLDOUT_TAG]))?;
            let fit = parts[0].samples(&inputs, &labels)?;
            let val = parts[1].samples(&inputs, &labels)?;
            let net = DenseNet::init(inputs.len(), &cfg.dnn.hidden, labels.len(), &mut init)?;
            let (net, history) = mlp_train(&net, &fit, Some(&val), &cfg.dnn.train_config(train_seed))?;
            let doc = NetworkDoc::Dnn(DenseNetDoc::from(&net));
            (Network::Dnn(net), doc, history, None)
        }
        ModelKind::EpistemicBnn | ModelKind::AleatoricBnn => {
            let samples = scaled.samples(&inputs, &labels)?;
            let head = cfg.bnn.head(kind == ModelKind::AleatoricBnn);
            let net = BnnNet::init(
                inputs.len(),
                &cfg.bnn.hidden_for(input),
                labels.len(),
                head,
                cfg.bnn.prior()?,
                cfg.bnn.sampling,
                &mut init,
            )?;
            let opts = BnnTrainOptions {
                kl_weight: cfg.bnn.kl_weight,
                ..BnnTrainOptions::default()
            };
            let (net, history, stats) = bnn_train(&net, &samples, None, &cfg.bnn.train_config(input, train_seed), &opts)?;
            let doc = NetworkDoc::Bnn(BnnNetDoc::from(&net));
            (Network::Bnn(net), doc, history, Some(stats))
        }
    };
    let bundle = ModelBundle {
        schema_version: MODEL_SCHEMA_VERSION,
        kind,
        input_config: input,
        input_columns: inputs,
        label_columns: labels,
        input_scaler,
        label_scaler,
        trained_on: train.turbine_id().to_string(),
        training_rows: train.len(),
        seed,
        network: doc,
    };
    Ok(Trained {
        bundle,
        network,
        history,
        weight_stats,
    })
}

/// Raw-unit inputs of `ds` for `bundle`, scaled.
pub fn scaled_inputs(bundle: &ModelBundle, ds: &Dataset) -> Result<Matrix> {
    if let Some(missing) = bundle.input_columns.iter().find(|c| !ds.has_column(c)) {
        return Err(Error::invalid(format!(
            "{}: missing input column `{missing}` required by the model (input configuration {})",
            ds.turbine_id(),
            bundle.input_config.id()
        )));
    }
    let x = ds.matrix(&bundle.input_columns)?;
    Ok(bundle.input_scaler.transform(&x, &bundle.input_columns)?)
}

/// Labels of `ds` in physical units, if it has them.
pub fn raw_labels(bundle: &ModelBundle, ds: &Dataset) -> Result<Option<Matrix>> {
    if bundle.label_columns.iter().all(|c| ds.has_column(c)) {
        Ok(Some(ds.matrix(&bundle.label_columns)?))
    } else {
        Ok(None)
    }
}

/// Predictive ensemble summary in physical units.
#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub decomposition: UncertaintyDecomposition,
    /// Per-row log-likelihood averaged over draws (rows with labels only).
    pub row_log_likelihoods: Option<Vec<f64>>,
    pub expected_log_likelihood: Option<f64>,
}

/// Streams `n_f` posterior draws over the rows of `ds`, mapping every draw
/// back to physical label units before accumulating.
pub fn run_ensemble(bundle: &ModelBundle, net: &BnnNet, ds: &Dataset, n_f: usize, seed: u64) -> Result<EnsembleSummary> {
    let x = scaled_inputs(bundle, ds)?;
    let labels = raw_labels(bundle, ds)?;
    let (offset, scale) = bundle.label_scaler.offset_scale(&bundle.label_columns)?;
    let channels = bundle.label_columns.len();
    let mut acc = EnsembleAccumulator::new(x.rows(), channels, labels.as_ref())?;
    let mut failure = None;
    ensemble_fold(net, &x, n_f, seed, |_, mu, sigma| {
        if failure.is_some() {
            return;
        }
        let (mut mu, mut sigma) = (mu.clone(), sigma.clone());
        for r in 0..mu.rows() {
            let (m, s) = (mu.row_mut(r), sigma.row_mut(r));
            for c in 0..channels {
                m[c] = offset[c] + scale[c] * m[c];
                s[c] *= scale[c];
            }
        }
        if let Err(e) = acc.push(&mu, &sigma) {
            failure = Some(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(EnsembleSummary {
        decomposition: acc.decomposition()?,
        row_log_likelihoods: acc.row_log_likelihoods(),
        expected_log_likelihood: acc.expected_log_likelihood(),
    })
}

/// Point predictions in physical units: the network output for a
/// deterministic model, `E[mu]` over `n_f` draws for a variational one.
pub fn point_predictions(bundle: &ModelBundle, net: &Network, ds: &Dataset, n_f: usize, seed: u64) -> Result<Matrix> {
    match net {
        Network::Dnn(n) => {
            let z = n.predict(&scaled_inputs(bundle, ds)?)?;
            Ok(bundle.label_scaler.inverse(&z, &bundle.label_columns)?)
        }
        Network::Bnn(n) => Ok(run_ensemble(bundle, n, ds, n_f, seed)?.decomposition.expected_mu_matrix()),
    }
}

/// Per-channel point errors of `pred` against the labels of `ds`.
pub fn channel_errors(bundle: &ModelBundle, pred: &Matrix, ds: &Dataset) -> Result<Vec<PointErrors>> {
    let labels = raw_labels(bundle, ds)?
        .ok_or_else(|| Error::invalid(format!("{}: labels required for point errors", ds.turbine_id())))?;
    Ok(point_errors_by_channel(pred, &labels)?)
}
