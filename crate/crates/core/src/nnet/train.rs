use alloc::format;
use alloc::vec::Vec;

use super::{DenseNet, Loss, Optimizer, OptimizerKind};
use crate::rng::{shuffle, stream};
use crate::{Error, Result, Samples};

const SHUFFLE_TAG: u64 = 0x5348_5546;

/// Quantity watched by early stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Monitor {
    TrainingLoss,
    ValidationLoss,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EarlyStop {
    pub monitor: Monitor,
    pub patience: usize,
    /// An epoch counts as an improvement only if it beats the best value by more than this.
    pub min_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop: Option<EarlyStop>,
    pub seed: u64,
}

impl TrainConfig {
    /// Deterministic-network defaults: Adamax at 0.001, 32-row batches,
    /// 200 epochs, patience 5 on validation loss.
    pub fn dnn_default() -> Self {
        Self {
            optimizer: OptimizerKind::Adamax,
            learning_rate: 0.001,
            batch_size: 32,
            max_epochs: 200,
            early_stop: Some(EarlyStop {
                monitor: Monitor::ValidationLoss,
                patience: 5,
                min_delta: 0.0,
            }),
            seed: 0,
        }
    }

    /// Variational-network defaults: Adam at 0.0003, 1024-row batches,
    /// 2000 epochs, patience 30 on training loss with a 1e-4 improvement threshold.
    pub fn bnn_default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            learning_rate: 0.0003,
            batch_size: 1024,
            max_epochs: 2000,
            early_stop: Some(EarlyStop {
                monitor: Monitor::TrainingLoss,
                patience: 30,
                min_delta: 1e-4,
            }),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be >= 1"));
        }
        if let Some(es) = self.early_stop {
            if es.patience == 0 {
                return Err(Error::invalid("early-stopping patience must be >= 1"));
            }
            if !(es.min_delta >= 0.0) {
                return Err(Error::invalid("early-stopping min_delta must be >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    pub training_loss: f64,
    pub validation_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Number of completed epochs.
    pub stopped_epoch: usize,
    /// 1-based epoch whose parameters were returned, if early stopping selected one.
    pub best_epoch: Option<usize>,
}

impl TrainHistory {
    pub fn training_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.training_loss).collect()
    }

    pub fn validation_losses(&self) -> Vec<f64> {
        self.epochs.iter().filter_map(|e| e.validation_loss).collect()
    }
}

/// Early-stopping bookkeeping shared by both trainers.
#[derive(Debug, Clone)]
pub(crate) struct Patience {
    rule: Option<EarlyStop>,
    best: f64,
    best_epoch: usize,
    waited: usize,
}

pub(crate) enum Verdict {
    Improved,
    Continue,
    Stop,
}

impl Patience {
    pub(crate) fn new(rule: Option<EarlyStop>) -> Self {
        Self {
            rule,
            best: f64::INFINITY,
            best_epoch: 0,
            waited: 0,
        }
    }

    pub(crate) fn observe(&mut self, epoch: usize, record: &EpochRecord) -> Verdict {
        let Some(rule) = self.rule else {
            return Verdict::Continue;
        };
        let value = match rule.monitor {
            Monitor::TrainingLoss => record.training_loss,
            Monitor::ValidationLoss => record.validation_loss.unwrap_or(f64::INFINITY),
        };
        if value < self.best - rule.min_delta || (self.best.is_infinite() && value.is_finite()) {
            self.best = value;
            self.best_epoch = epoch;
            self.waited = 0;
            Verdict::Improved
        } else {
            self.waited += 1;
            if self.waited >= rule.patience {
                Verdict::Stop
            } else {
                Verdict::Continue
            }
        }
    }

    pub(crate) fn best_epoch(&self) -> Option<usize> {
        self.rule.map(|_| self.best_epoch).filter(|e| *e > 0)
    }
}

pub(crate) fn check_monitor(cfg: &TrainConfig, validation: Option<&Samples>) -> Result<()> {
    if let Some(EarlyStop {
        monitor: Monitor::ValidationLoss,
        ..
    }) = cfg.early_stop
    {
        if validation.map_or(true, |v| v.is_empty()) {
            return Err(Error::Empty("validation set required when monitoring validation loss"));
        }
    }
    Ok(())
}

/// Minibatch order for one epoch.
pub(crate) fn epoch_order(seed: u64, epoch: usize, rows: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rows).collect();
    let mut rng = stream(seed, &[SHUFFLE_TAG, epoch as u64]);
    shuffle(&mut rng, &mut order);
    order
}

/// Trains a deterministic network on the MAE objective.
///
/// With early stopping configured, the parameters from the best monitored
/// epoch are returned; otherwise the parameters after the last epoch.
pub fn mlp_train(
    net: &DenseNet,
    train: &Samples,
    validation: Option<&Samples>,
    cfg: &TrainConfig,
) -> Result<(DenseNet, TrainHistory)> {
    mlp_train_with_loss(net, train, validation, cfg, Loss::Mae)
}

pub fn mlp_train_with_loss(
    net: &DenseNet,
    train: &Samples,
    validation: Option<&Samples>,
    cfg: &TrainConfig,
    loss: Loss,
) -> Result<(DenseNet, TrainHistory)> {
    cfg.validate()?;
    check_monitor(cfg, validation)?;
    let mut history = TrainHistory::default();
    if cfg.max_epochs == 0 {
        return Ok((net.clone(), history));
    }
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let mut current = net.clone();
    let mut best = net.clone();
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate);
    let mut patience = Patience::new(cfg.early_stop);

    for epoch in 1..=cfg.max_epochs {
        let order = epoch_order(cfg.seed, epoch, train.len());
        for chunk in order.chunks(cfg.batch_size) {
            let batch = train.select(chunk);
            let (_, grads) = current.gradient(&batch, loss)?;
            optimizer.step(&mut current.param_groups_mut(), &grads);
        }
        let record = EpochRecord {
            training_loss: current.loss(train, loss)?,
            validation_loss: match validation {
                Some(v) if !v.is_empty() => Some(current.loss(v, loss)?),
                _ => None,
            },
        };
        if !record.training_loss.is_finite()
            || record.validation_loss.is_some_and(|v| !v.is_finite())
            || !current.all_finite()
        {
            return Err(Error::NonFinite(format!(
                "training loss diverged at epoch {epoch} (training {}, validation {:?})",
                record.training_loss, record.validation_loss
            )));
        }
        history.epochs.push(record);
        history.stopped_epoch = epoch;
        match patience.observe(epoch, &record) {
            Verdict::Improved => best.clone_from(&current),
            Verdict::Continue => {}
            Verdict::Stop => break,
        }
    }
    history.best_epoch = patience.best_epoch();
    let out = if cfg.early_stop.is_some() { best } else { current };
    Ok((out, history))
}
