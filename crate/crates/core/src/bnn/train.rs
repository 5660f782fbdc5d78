use alloc::format;
use alloc::vec::Vec;

use super::net::BnnNet;
use crate::math::{log, LN_2PI};
use crate::nnet::train::{check_monitor, epoch_order, Patience, Verdict};
use crate::nnet::{EpochRecord, Optimizer, TrainConfig, TrainHistory};
use crate::rng::stream;
use crate::{Error, Result, Samples};

const STEP_TAG: u64 = 0x5354_4550;
const VALIDATION_TAG: u64 = 0x5641_4c44;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ParamKind {
    Weight,
    Bias,
}

/// Address of one variational parameter. For weights `index` is the
/// row-major position in the `outputs x inputs` matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrackedParam {
    pub layer: usize,
    pub kind: ParamKind,
    pub index: usize,
}

impl TrackedParam {
    /// First bias of the output layer.
    pub fn output_bias(net: &BnnNet) -> Self {
        Self {
            layer: net.layers().len() - 1,
            kind: ParamKind::Bias,
            index: 0,
        }
    }

    fn read(&self, net: &BnnNet) -> Result<(f64, f64)> {
        let layer = net
            .layers()
            .get(self.layer)
            .ok_or_else(|| Error::invalid(format!("tracked layer {} out of range", self.layer)))?;
        let q = match self.kind {
            ParamKind::Weight if self.index < layer.weight_mu().len() => {
                layer.weight_posterior(self.index / layer.inputs(), self.index % layer.inputs())
            }
            ParamKind::Bias if self.index < layer.outputs() => layer.bias_posterior(self.index),
            _ => return Err(Error::invalid(format!("tracked index {} out of range", self.index))),
        };
        Ok((q.mu, q.sigma()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightStat {
    /// 0 is the initial state, `k` the state after epoch `k`.
    pub epoch: usize,
    pub mu: f64,
    pub sd: f64,
    /// `sd / |mu|`; infinite when `mu == 0`.
    pub cov: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamTrace {
    pub param: TrackedParam,
    pub stats: Vec<WeightStat>,
}

impl ParamTrace {
    pub fn at_epoch(&self, epoch: usize) -> Option<&WeightStat> {
        self.stats.iter().find(|s| s.epoch == epoch)
    }

    pub fn last(&self) -> Option<&WeightStat> {
        self.stats.last()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightStatHistory {
    pub traces: Vec<ParamTrace>,
}

impl WeightStatHistory {
    fn record(&mut self, epoch: usize, net: &BnnNet) -> Result<()> {
        for t in &mut self.traces {
            let (mu, sd) = t.param.read(net)?;
            t.stats.push(WeightStat {
                epoch,
                mu,
                sd,
                cov: sd / mu.abs(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnnTrainOptions {
    /// Parameters whose posterior is recorded every epoch; empty means the first output bias.
    pub tracked: Vec<TrackedParam>,
    /// KL multiplier in the per-row loss; defaults to `1 / training rows`.
    pub kl_weight: Option<f64>,
    /// Posterior draws averaged when scoring the validation set.
    pub validation_samples: usize,
}

impl Default for BnnTrainOptions {
    fn default() -> Self {
        Self {
            tracked: Vec::new(),
            kl_weight: None,
            validation_samples: 8,
        }
    }
}

/// Trains by minimising the single-sample negative ELBO per row:
/// `(1/B) Σ NLL + kl_weight · KL`.
///
/// Recorded losses are in the same per-row units. The training loss of an
/// epoch is the row-weighted average of its minibatch losses; the validation
/// loss averages the likelihood over `validation_samples` posterior draws.
pub fn bnn_train(
    net: &BnnNet,
    train: &Samples,
    validation: Option<&Samples>,
    cfg: &TrainConfig,
    opts: &BnnTrainOptions,
) -> Result<(BnnNet, TrainHistory, WeightStatHistory)> {
    cfg.validate()?;
    check_monitor(cfg, validation)?;
    let tracked = if opts.tracked.is_empty() {
        alloc::vec![TrackedParam::output_bias(net)]
    } else {
        opts.tracked.clone()
    };
    let mut stats = WeightStatHistory {
        traces: tracked
            .into_iter()
            .map(|param| ParamTrace {
                param,
                stats: Vec::new(),
            })
            .collect(),
    };
    stats.record(0, net)?;
    let mut history = TrainHistory::default();
    if cfg.max_epochs == 0 {
        return Ok((net.clone(), history, stats));
    }
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if opts.validation_samples == 0 {
        return Err(Error::invalid("validation_samples must be >= 1"));
    }
    let n = train.len();
    let kl_weight = opts.kl_weight.unwrap_or(1.0 / n as f64);
    if !(kl_weight >= 0.0 && kl_weight.is_finite()) {
        return Err(Error::invalid("kl_weight must be finite and >= 0"));
    }

    let mut current = net.clone();
    let mut best = net.clone();
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate);
    let mut patience = Patience::new(cfg.early_stop);

    for epoch in 1..=cfg.max_epochs {
        let order = epoch_order(cfg.seed, epoch, n);
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch = train.select(chunk);
            let rows = chunk.len() as f64;
            let mut rng = stream(cfg.seed, &[STEP_TAG, epoch as u64, b as u64]);
            let noise = current.sample_noise(chunk.len(), &mut rng);
            let (loss, mut grads) = current
                .loss_and_grad(&batch, &noise, kl_weight * rows)
                .map_err(|e| diverged(epoch, e))?;
            for g in &mut grads {
                for v in g.iter_mut() {
                    *v /= rows;
                }
            }
            epoch_loss += loss;
            optimizer.step(&mut current.param_groups_mut(), &grads);
        }
        let record = EpochRecord {
            training_loss: epoch_loss / n as f64,
            validation_loss: match validation {
                Some(v) if !v.is_empty() => Some(validation_loss(&current, v, kl_weight, cfg.seed, opts.validation_samples)?),
                _ => None,
            },
        };
        if !record.training_loss.is_finite()
            || record.validation_loss.is_some_and(|v| !v.is_finite())
            || !current.all_finite()
        {
            return Err(Error::NonFinite(format!(
                "negative ELBO diverged at epoch {epoch} (training {}, validation {:?})",
                record.training_loss, record.validation_loss
            )));
        }
        history.epochs.push(record);
        history.stopped_epoch = epoch;
        stats.record(epoch, &current)?;
        match patience.observe(epoch, &record) {
            Verdict::Improved => best.clone_from(&current),
            Verdict::Continue => {}
            Verdict::Stop => break,
        }
    }
    history.best_epoch = patience.best_epoch();
    let out = if cfg.early_stop.is_some() { best } else { current };
    Ok((out, history, stats))
}

fn diverged(epoch: usize, e: Error) -> Error {
    match e {
        Error::NonFinite(msg) => Error::NonFinite(format!("{msg} at epoch {epoch}")),
        other => other,
    }
}

/// Per-row negative ELBO on held-out rows, likelihood averaged over posterior draws.
fn validation_loss(net: &BnnNet, data: &Samples, kl_weight: f64, seed: u64, draws: usize) -> Result<f64> {
    let mut nll = 0.0;
    for k in 0..draws {
        let mut rng = stream(seed, &[VALIDATION_TAG, k as u64]);
        let (mu, sigma) = net.sample_realization(&mut rng).predict(&data.inputs);
        for ((&m, &s), &y) in mu.as_slice().iter().zip(sigma.as_slice()).zip(data.targets.as_slice()) {
            let z = (y - m) / s;
            nll += 0.5 * LN_2PI + log(s) + 0.5 * z * z;
        }
    }
    Ok(nll / (draws * data.len()) as f64 + kl_weight * net.kl())
}
