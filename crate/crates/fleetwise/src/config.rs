//! Experiment settings, loaded from TOML or JSON, and seed resolution.

use std::fs;
use std::path::Path;

use fleetwise_core::bnn::{GaussianPrior, Head, SamplingMode};
use fleetwise_core::data::schema::DNN_HIDDEN;
use fleetwise_core::data::{FarmSpec, InputConfig};
use fleetwise_core::nnet::{EarlyStop, Monitor, OptimizerKind, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SEED_ENV: &str = "FLEETWISE_SEED";
pub const DEFAULT_SEED: u64 = 0;

/// Deterministic-network hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DnnSettings {
    pub hidden: Vec<usize>,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Early-stopping patience on validation loss; `None` trains every epoch.
    pub patience: Option<usize>,
    pub min_delta: f64,
    /// Share of the training rows held out to monitor validation loss.
    pub validation_fraction: f64,
}

impl Default for DnnSettings {
    fn default() -> Self {
        let t = TrainConfig::dnn_default();
        Self {
            hidden: DNN_HIDDEN.to_vec(),
            optimizer: t.optimizer,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.early_stop.map(|e| e.patience),
            min_delta: 0.0,
            validation_fraction: 0.2,
        }
    }
}

impl DnnSettings {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            optimizer: self.optimizer,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            early_stop: self.patience.map(|patience| EarlyStop {
                monitor: Monitor::ValidationLoss,
                patience,
                min_delta: self.min_delta,
            }),
            seed,
        }
    }
}

/// Variational-network hyperparameters. `hidden` and `learning_rate` fall
/// back to the per-configuration defaults when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BnnSettings {
    pub hidden: Option<Vec<usize>>,
    pub optimizer: OptimizerKind,
    pub learning_rate: Option<f64>,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Early-stopping patience on training loss; `None` trains every epoch.
    pub patience: Option<usize>,
    pub min_delta: f64,
    pub prior_std: f64,
    pub sampling: SamplingMode,
    /// Output standard deviation of the epistemic variant, in scaled label units.
    pub sigma_fixed: f64,
    /// KL multiplier per row; defaults to one over the training rows.
    pub kl_weight: Option<f64>,
}

impl Default for BnnSettings {
    fn default() -> Self {
        let t = TrainConfig::bnn_default();
        let es = t.early_stop.expect("variational defaults use early stopping");
        Self {
            hidden: None,
            optimizer: t.optimizer,
            learning_rate: None,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: Some(es.patience),
            min_delta: es.min_delta,
            prior_std: 1.0,
            sampling: SamplingMode::Flipout,
            sigma_fixed: 1e-3,
            kl_weight: None,
        }
    }
}

impl BnnSettings {
    pub fn hidden_for(&self, cfg: InputConfig) -> Vec<usize> {
        self.hidden.clone().unwrap_or_else(|| cfg.bnn_hidden().to_vec())
    }

    pub fn prior(&self) -> Result<GaussianPrior> {
        Ok(GaussianPrior::new(0.0, self.prior_std)?)
    }

    pub fn head(&self, aleatoric: bool) -> Head {
        if aleatoric {
            Head::Aleatoric
        } else {
            Head::Epistemic {
                sigma_fixed: self.sigma_fixed,
            }
        }
    }

    pub fn train_config(&self, cfg: InputConfig, seed: u64) -> TrainConfig {
        TrainConfig {
            optimizer: self.optimizer,
            learning_rate: self.learning_rate.unwrap_or_else(|| cfg.bnn_learning_rate()),
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            early_stop: self.patience.map(|patience| EarlyStop {
                monitor: Monitor::TrainingLoss,
                patience,
                min_delta: self.min_delta,
            }),
            seed,
        }
    }
}

/// Deployment and report settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSettings {
    /// Posterior draws per prediction.
    pub forward_runs: usize,
    pub histogram_bins: usize,
    /// Bins of the per-input marginal densities.
    pub marginal_bins: usize,
}

impl Default for ReportSettings {
    fn default() -> Self {
        Self {
            forward_runs: fleetwise_core::bnn::DEFAULT_FORWARD_RUNS,
            histogram_bins: 10,
            marginal_bins: 20,
        }
    }
}

/// Every tunable of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    /// Input configuration used by `train`, `compare` and `period-study`.
    pub input_config: InputConfig,
    /// Share of the fleet-leader rows held out as the common test set.
    pub test_fraction: f64,
    pub period_months: Vec<u32>,
    pub dnn: DnnSettings,
    pub bnn: BnnSettings,
    pub report: ReportSettings,
    /// Synthetic farm; its own `seed` is replaced by the resolved run seed.
    pub farm: FarmSpec,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: None,
            input_config: InputConfig::DEPLOYMENT,
            test_fraction: 0.25,
            period_months: vec![3, 6, 9, 12, 15, 18, 21, 24],
            dnn: DnnSettings::default(),
            bnn: BnnSettings::default(),
            report: ReportSettings::default(),
            farm: FarmSpec::default(),
        }
    }
}

impl Config {
    /// Reads a TOML file, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Config = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?
        } else {
            toml::from_str(&text).map_err(|e| Error::parse(path, e))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::invalid("test_fraction must lie in (0, 1)"));
        }
        if !(self.dnn.validation_fraction > 0.0 && self.dnn.validation_fraction < 1.0) {
            return Err(Error::invalid("dnn.validation_fraction must lie in (0, 1)"));
        }
        if self.dnn.hidden.contains(&0) || self.bnn.hidden.as_ref().is_some_and(|h| h.contains(&0)) {
            return Err(Error::invalid("hidden layer widths must be >= 1"));
        }
        if !(self.bnn.sigma_fixed > 0.0 && self.bnn.sigma_fixed.is_finite()) {
            return Err(Error::invalid("bnn.sigma_fixed must be positive"));
        }
        self.bnn.prior()?;
        self.dnn.train_config(0).validate()?;
        self.bnn.train_config(self.input_config, 0).validate()?;
        if self.report.forward_runs < 2 {
            return Err(Error::invalid("report.forward_runs must be >= 2"));
        }
        if self.report.histogram_bins == 0 || self.report.marginal_bins == 0 {
            return Err(Error::invalid("histogram bin counts must be >= 1"));
        }
        if self.period_months.contains(&0) {
            return Err(Error::invalid("collection periods must be >= 1 month"));
        }
        self.farm.validate()?;
        Ok(())
    }
}

/// Where the run seed came from, lowest priority first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Default,
    Environment,
    Config,
    Flag,
}

/// Picks the seed: flag over config file over `FLEETWISE_SEED` over the default.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>, env: Option<&str>) -> Result<(u64, SeedSource)> {
    if let Some(s) = flag {
        return Ok((s, SeedSource::Flag));
    }
    if let Some(s) = config {
        return Ok((s, SeedSource::Config));
    }
    if let Some(raw) = env {
        let s = raw
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{raw}`")))?;
        return Ok((s, SeedSource::Environment));
    }
    Ok((DEFAULT_SEED, SeedSource::Default))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(None, None, None).unwrap(), (0, SeedSource::Default));
        assert_eq!(resolve_seed(None, None, Some("9")).unwrap(), (9, SeedSource::Environment));
        assert_eq!(resolve_seed(None, Some(4), Some("9")).unwrap(), (4, SeedSource::Config));
        assert_eq!(resolve_seed(Some(1), Some(4), Some("9")).unwrap(), (1, SeedSource::Flag));
        assert!(resolve_seed(None, None, Some("x")).is_err());
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let cfg: Config = toml::from_str("seed = 3\n[bnn]\nbatch_size = 64\n").unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.bnn.batch_size, 64);
        assert_eq!(cfg.bnn.max_epochs, 2000);
        assert_eq!(cfg.input_config.id(), 10);
        assert!(toml::from_str::<Config>("bogus = 1\n").is_err());
    }
}
