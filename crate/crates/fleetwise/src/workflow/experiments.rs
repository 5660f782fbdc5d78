use fleetwise_core::data::time::month_index;
use fleetwise_core::data::{split, Dataset, InputConfig};
use fleetwise_core::rng::derive_seed;
use fleetwise_core::stats::spearman;
use serde::{Deserialize, Serialize};

use super::train::{channel_errors, point_predictions, raw_labels, run_ensemble, train_model, Trained};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::model::{dedup_kinds, ModelKind, Network};

pub const RESULT_SCHEMA_VERSION: u32 = 1;

const SPLIT_TAG: u64 = 0x5445_5354;
const ENSEMBLE_TAG: u64 = 0x454e_534d;

/// Splits the fleet-leader rows into `(train, test)` with the configured test share.
pub fn train_test_split(ds: &Dataset, cfg: &Config, seed: u64) -> Result<(Dataset, Dataset)> {
    let mut parts = split(ds, &[1.0 - cfg.test_fraction, cfg.test_fraction], derive_seed(seed, &[SPLIT_TAG]))?;
    let test = parts.pop().expect("two parts");
    let train = parts.pop().expect("two parts");
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid(format!("{}: too few rows to split", ds.turbine_id())));
    }
    Ok((train, test))
}

/// Seed of the prediction ensembles of a run.
pub fn ensemble_seed(seed: u64) -> u64 {
    derive_seed(seed, &[ENSEMBLE_TAG])
}

fn mean_cov(values: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub input_config: u8,
    pub label: String,
    pub kind: ModelKind,
    pub epochs: usize,
    /// Percent error per label channel on the test rows (deterministic kind).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dnn_percent_error: Option<Vec<Option<f64>>>,
    /// Expected log-likelihood on the test rows (variational kinds).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bnn_expected_ll: Option<f64>,
    /// Percent error of `E[mu]` per channel (variational kinds).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bnn_percent_error: Option<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub seed: u64,
    pub turbine_id: String,
    pub train_rows: usize,
    pub test_rows: usize,
    pub entries: Vec<SweepEntry>,
}

/// Trains every `(config, kind)` pair on the same split of `ds` and scores
/// it on the held-out rows.
pub fn input_sweep(ds: &Dataset, configs: &[InputConfig], kinds: &[ModelKind], cfg: &Config, seed: u64) -> Result<SweepResult> {
    if configs.is_empty() {
        return Err(Error::invalid("no input configurations to sweep"));
    }
    for (i, c) in configs.iter().enumerate() {
        if configs[..i].contains(c) {
            return Err(Error::invalid(format!("input configuration {} listed twice", c.id())));
        }
    }
    let kinds = dedup_kinds(kinds);
    if kinds.is_empty() {
        return Err(Error::invalid("no model kinds to sweep"));
    }
    for c in configs {
        if let Some(missing) = c.columns().iter().find(|n| !ds.has_column(n)) {
            return Err(Error::invalid(format!(
                "{}: missing column `{missing}` needed by input configuration {}",
                ds.turbine_id(),
                c.id()
            )));
        }
    }
    let (train, test) = train_test_split(ds, cfg, seed)?;
    let n_f = cfg.report.forward_runs;
    let mut entries = Vec::new();
    for &input in configs {
        for &kind in &kinds {
            let t = train_model(&train, kind, input, cfg, seed)?;
            let (pred, ell) = match &t.network {
                Network::Dnn(_) => (point_predictions(&t.bundle, &t.network, &test, n_f, ensemble_seed(seed))?, None),
                Network::Bnn(net) => {
                    let s = run_ensemble(&t.bundle, net, &test, n_f, ensemble_seed(seed))?;
                    (s.decomposition.expected_mu_matrix(), s.expected_log_likelihood)
                }
            };
            let pe: Vec<Option<f64>> = channel_errors(&t.bundle, &pred, &test)?.iter().map(|e| e.percent_error).collect();
            let bayesian = kind.is_bayesian();
            let entry = SweepEntry {
                input_config: input.id(),
                label: input.label(),
                kind,
                epochs: t.history.stopped_epoch,
                dnn_percent_error: (!bayesian).then(|| pe.clone()),
                bnn_expected_ll: ell,
                bnn_percent_error: bayesian.then_some(pe),
            };
            entries.push(entry);
        }
    }
    Ok(SweepResult {
        schema_version: RESULT_SCHEMA_VERSION,
        seed,
        turbine_id: ds.turbine_id().to_string(),
        train_rows: train.len(),
        test_rows: test.len(),
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodEntry {
    pub months: u32,
    pub rows_used: usize,
    /// Set when the period holds no training rows; metrics are then absent.
    pub skipped: bool,
    pub epochs: usize,
    pub mean_cov_mu: Option<f64>,
    pub expected_ll: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodStudyResult {
    pub schema_version: u32,
    pub seed: u64,
    pub input_config: u8,
    pub test_rows: usize,
    pub forward_runs: usize,
    pub entries: Vec<PeriodEntry>,
    /// Spearman correlation of the period length with each metric, over
    /// periods that were not skipped.
    pub spearman_cov_mu: Option<f64>,
    pub spearman_expected_ll: Option<f64>,
}

/// Rows of `pool` recorded within the first `months` calendar months,
/// counted from the month of its earliest row.
pub fn first_months(pool: &Dataset, months: u32) -> Result<Dataset> {
    let Some(&start) = pool.timestamps().iter().min() else {
        return Ok(pool.clone());
    };
    let first = month_index(start)?;
    let idx = pool
        .timestamps()
        .iter()
        .map(|&t| month_index(t))
        .collect::<fleetwise_core::Result<Vec<_>>>()?;
    let keep: Vec<usize> = (0..pool.len()).filter(|&r| idx[r] - first < i64::from(months)).collect();
    Ok(pool.select_rows(&keep))
}

/// Trains one aleatoric network per collection period on the first
/// `months` of `pool` and scores all of them on the common `test` rows.
pub fn period_study(pool: &Dataset, periods: &[u32], test: &Dataset, cfg: &Config, seed: u64) -> Result<PeriodStudyResult> {
    if periods.is_empty() {
        return Err(Error::invalid("no collection periods given"));
    }
    let mut periods = periods.to_vec();
    periods.sort_unstable();
    if periods.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("collection periods listed twice"));
    }
    if periods[0] == 0 {
        return Err(Error::invalid("collection periods must be >= 1 month"));
    }
    if test.is_empty() {
        return Err(Error::invalid("period study needs a nonempty test set"));
    }
    let input = cfg.input_config;
    let n_f = cfg.report.forward_runs;
    let mut entries = Vec::with_capacity(periods.len());
    for &months in &periods {
        let rows = first_months(pool, months)?;
        if rows.len() < 2 {
            entries.push(PeriodEntry {
                months,
                rows_used: rows.len(),
                skipped: true,
                epochs: 0,
                mean_cov_mu: None,
                expected_ll: None,
            });
            continue;
        }
        let t = train_model(&rows, ModelKind::AleatoricBnn, input, cfg, seed)?;
        let Network::Bnn(net) = &t.network else {
            unreachable!("aleatoric kind trains a variational network")
        };
        let s = run_ensemble(&t.bundle, net, test, n_f, ensemble_seed(seed))?;
        entries.push(PeriodEntry {
            months,
            rows_used: rows.len(),
            skipped: false,
            epochs: t.history.stopped_epoch,
            mean_cov_mu: mean_cov(&s.decomposition.cov_mu),
            expected_ll: s.expected_log_likelihood,
        });
    }
    let trend = |f: fn(&PeriodEntry) -> Option<f64>| {
        let pairs: Vec<(f64, f64)> = entries.iter().filter_map(|e| f(e).map(|v| (f64::from(e.months), v))).collect();
        (pairs.len() >= 2).then(|| {
            let (m, v): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            spearman(&m, &v)
        })
    };
    let spearman_cov_mu = trend(|e| e.mean_cov_mu);
    let spearman_expected_ll = trend(|e| e.expected_ll);
    Ok(PeriodStudyResult {
        schema_version: RESULT_SCHEMA_VERSION,
        seed,
        input_config: input.id(),
        test_rows: test.len(),
        forward_runs: n_f,
        entries,
        spearman_cov_mu,
        spearman_expected_ll,
    })
}

/// Metrics of one model kind on one turbine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindMetrics {
    pub kind: ModelKind,
    /// Per channel; `E[mu]` for the variational kinds. Absent without labels.
    pub percent_error: Option<Vec<Option<f64>>>,
    /// Variational kinds only.
    pub mean_cov_mu: Option<f64>,
    pub expected_ll: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbineComparison {
    pub turbine_id: String,
    pub rows: usize,
    pub models: Vec<KindMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub schema_version: u32,
    pub seed: u64,
    pub input_config: u8,
    pub forward_runs: usize,
    pub kinds: Vec<ModelKind>,
    pub turbines: Vec<TurbineComparison>,
}

/// Trains each kind (duplicates removed) on `train` and evaluates it on
/// `test` followed by every turbine in `turbines`.
pub fn compare_models(
    train: &Dataset,
    test: &Dataset,
    turbines: &[Dataset],
    kinds: &[ModelKind],
    cfg: &Config,
    seed: u64,
) -> Result<(ComparisonTable, Vec<Trained>)> {
    let kinds = dedup_kinds(kinds);
    if kinds.is_empty() {
        return Err(Error::invalid("no model kinds to compare"));
    }
    let models = kinds
        .iter()
        .map(|&k| train_model(train, k, cfg.input_config, cfg, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut targets = vec![test.clone()];
    targets.extend_from_slice(turbines);
    let table = compare_trained(&models, &targets, cfg.report.forward_runs, seed)?;
    Ok((table, models))
}

/// Evaluates already trained models on each dataset of `targets`.
pub fn compare_trained(models: &[Trained], targets: &[Dataset], n_f: usize, seed: u64) -> Result<ComparisonTable> {
    let Some(first) = models.first() else {
        return Err(Error::invalid("no models to compare"));
    };
    if models.iter().any(|m| m.bundle.input_config != first.bundle.input_config) {
        return Err(Error::invalid("compared models must share one input configuration"));
    }
    let mut turbines = Vec::with_capacity(targets.len());
    for ds in targets {
        let mut metrics = Vec::with_capacity(models.len());
        for m in models {
            let has_labels = raw_labels(&m.bundle, ds)?.is_some();
            let (pred, cov, ell) = match &m.network {
                Network::Dnn(_) => (point_predictions(&m.bundle, &m.network, ds, n_f, ensemble_seed(seed))?, None, None),
                Network::Bnn(net) => {
                    let s = run_ensemble(&m.bundle, net, ds, n_f, ensemble_seed(seed))?;
                    let cov = mean_cov(&s.decomposition.cov_mu);
                    (s.decomposition.expected_mu_matrix(), cov, s.expected_log_likelihood)
                }
            };
            let percent_error = if has_labels {
                Some(channel_errors(&m.bundle, &pred, ds)?.iter().map(|e| e.percent_error).collect())
            } else {
                None
            };
            metrics.push(KindMetrics {
                kind: m.bundle.kind,
                percent_error,
                mean_cov_mu: cov,
                expected_ll: ell,
            });
        }
        turbines.push(TurbineComparison {
            turbine_id: ds.turbine_id().to_string(),
            rows: ds.len(),
            models: metrics,
        });
    }
    Ok(ComparisonTable {
        schema_version: RESULT_SCHEMA_VERSION,
        seed,
        input_config: first.bundle.input_config.id(),
        forward_runs: n_f,
        kinds: models.iter().map(|m| m.bundle.kind).collect(),
        turbines,
    })
}
