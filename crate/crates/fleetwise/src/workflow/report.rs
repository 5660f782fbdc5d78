use fleetwise_core::bnn::BnnNet;
use fleetwise_core::data::Dataset;
use fleetwise_core::metrics::{min_euclidean_distance, PointErrors};
use fleetwise_core::stats::{ks_two_sample, BoxStats};
use serde::{Deserialize, Serialize};

use super::train::{channel_errors, run_ensemble, scaled_inputs};
use crate::config::ReportSettings;
use crate::error::{Error, Result};
use crate::model::{ModelBundle, ModelKind};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// Share of all rows falling in this bin.
    pub probability: f64,
    /// Mean `cov_mu` of the rows in this bin with a defined value.
    pub mean_cov_mu: Option<f64>,
}

/// Bins `values` over their own range. See [`dem_histogram_in`].
pub fn dem_histogram(values: &[f64], cov_mu: &[Option<f64>], n_bins: usize) -> Result<Vec<HistogramBin>> {
    let (lo, hi) = finite_range(values).ok_or_else(|| Error::invalid("histogram needs at least one finite value"))?;
    dem_histogram_in(values, cov_mu, n_bins, lo, hi)
}

/// Bins `values` into `n_bins` equal-width bins spanning `[lo, hi]`, the last
/// bin closed. A degenerate range is widened by 0.5 on each side.
/// Probabilities are normalised by the number of rows.
pub fn dem_histogram_in(values: &[f64], cov_mu: &[Option<f64>], n_bins: usize, lo: f64, hi: f64) -> Result<Vec<HistogramBin>> {
    if n_bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    if values.is_empty() {
        return Err(Error::invalid("histogram of an empty row set"));
    }
    if values.len() != cov_mu.len() {
        return Err(Error::invalid("histogram values and cov_mu differ in length"));
    }
    if values.iter().any(|v| !v.is_finite()) || !(lo.is_finite() && hi.is_finite() && hi >= lo) {
        return Err(Error::invalid("histogram values and range must be finite"));
    }
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    let mut cov_sum = vec![0.0; n_bins];
    let mut cov_n = vec![0usize; n_bins];
    for (&v, c) in values.iter().zip(cov_mu) {
        if v < lo || v > hi {
            return Err(Error::invalid(format!("value {v} outside histogram range [{lo}, {hi}]")));
        }
        let b = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[b] += 1;
        if let Some(c) = c {
            cov_sum[b] += c;
            cov_n[b] += 1;
        }
    }
    let total = values.len() as f64;
    Ok((0..n_bins)
        .map(|b| HistogramBin {
            lower: lo + b as f64 * width,
            upper: if b + 1 == n_bins { hi } else { lo + (b + 1) as f64 * width },
            count: counts[b],
            probability: counts[b] as f64 / total,
            mean_cov_mu: (cov_n[b] > 0).then(|| cov_sum[b] / cov_n[b] as f64),
        })
        .collect())
}

fn finite_range(values: &[f64]) -> Option<(f64, f64)> {
    values
        .iter()
        .filter(|v| v.is_finite())
        .fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((f64::min(lo, v), f64::max(hi, v))),
        })
}

/// Per-channel part of an [`UncertaintyReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub channel: String,
    /// Box statistics of `E[mu]` (MNm).
    pub expected_mu: BoxStats,
    pub cov_mu: Option<BoxStats>,
    /// Rows whose expected moment was too close to zero for a CoV.
    pub undefined_cov_rows: usize,
    pub histogram: Vec<HistogramBin>,
    /// Errors of `E[mu]` against the labels, when present.
    pub point_errors: Option<PointErrors>,
}

/// Distribution of one input column on a turbine, compared with the reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputMarginal {
    pub column: String,
    pub summary: BoxStats,
    /// Density on the shared grid `[lower, upper]`, one value per bin.
    pub lower: f64,
    pub upper: f64,
    pub density: Vec<f64>,
    /// Two-sample Kolmogorov-Smirnov test against the reference rows.
    pub ks_statistic: f64,
    pub ks_p_value: f64,
}

/// One deployment row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowRecord {
    pub timestamp: i64,
    pub expected_mu: Vec<f64>,
    pub cov_mu: Vec<Option<f64>>,
    pub aleatory_var: Vec<f64>,
    pub epistemic_var: Vec<f64>,
    pub r_min: f64,
    pub log_likelihood: Option<f64>,
}

/// Uncertainty summary of a model deployed on one turbine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub schema_version: u32,
    pub turbine_id: String,
    pub model_kind: ModelKind,
    pub input_config: u8,
    pub rows: usize,
    pub forward_runs: usize,
    pub seed: u64,
    /// Mean `cov_mu` over rows and channels with a defined value.
    pub mean_cov_mu: Option<f64>,
    pub mean_r_min: f64,
    pub r_min: BoxStats,
    pub expected_log_likelihood: Option<f64>,
    pub log_likelihood: Option<BoxStats>,
    pub channels: Vec<ChannelReport>,
    pub marginals: Vec<InputMarginal>,
    #[serde(skip)]
    pub per_row: Vec<RowRecord>,
}

impl UncertaintyReport {
    /// Every defined `cov_mu` value, all channels pooled.
    pub fn cov_mu_values(&self) -> Vec<f64> {
        self.per_row.iter().flat_map(|r| r.cov_mu.iter().flatten().copied()).collect()
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn box_stats(values: &[f64], what: &str) -> Result<BoxStats> {
    BoxStats::from_values(values).ok_or_else(|| Error::invalid(format!("no finite values for {what}")))
}

/// Deploys a variational model on every turbine.
///
/// Each turbine gets `forward_runs` posterior draws (the same weight
/// realisations for all turbines), the variance decomposition in physical
/// units, `r_min` against `reference` in scaled input space, DEM histograms
/// on a range shared by all turbines, and input marginals compared with
/// `reference`. The log-likelihood is reported only for turbines with labels.
pub fn deploy_farm(
    bundle: &ModelBundle,
    net: &BnnNet,
    turbines: &[Dataset],
    reference: &Dataset,
    settings: &ReportSettings,
    seed: u64,
) -> Result<Vec<UncertaintyReport>> {
    if turbines.is_empty() {
        return Err(Error::invalid("no turbines to deploy on"));
    }
    if let Some(t) = turbines.iter().find(|t| t.is_empty()) {
        return Err(Error::invalid(format!("{}: no rows to deploy on", t.turbine_id())));
    }
    if reference.is_empty() {
        return Err(Error::invalid("reference training set is empty"));
    }
    if net.input_width() != bundle.input_columns.len() {
        return Err(Error::invalid("network input width does not match the model's input columns"));
    }
    let reference_x = scaled_inputs(bundle, reference)?;
    let channels = bundle.label_columns.len();

    let mut partial = Vec::with_capacity(turbines.len());
    for ds in turbines {
        let summary = run_ensemble(bundle, net, ds, settings.forward_runs, seed)?;
        let r_min = min_euclidean_distance(&scaled_inputs(bundle, ds)?, &reference_x)?;
        partial.push((summary, r_min));
    }

    let mut reports = Vec::with_capacity(turbines.len());
    let ranges: Vec<(f64, f64)> = (0..channels)
        .map(|c| {
            let all: Vec<f64> = partial.iter().flat_map(|(s, _)| s.decomposition.expected_mu_channel(c)).collect();
            finite_range(&all).ok_or_else(|| Error::invalid("no finite predictions"))
        })
        .collect::<Result<_>>()?;
    let marginals = input_marginals(bundle, turbines, reference, settings.marginal_bins)?;

    for ((ds, (summary, r_min)), marginals) in turbines.iter().zip(partial).zip(marginals) {
        let d = &summary.decomposition;
        let errors = if bundle.label_columns.iter().all(|c| ds.has_column(c)) {
            Some(channel_errors(bundle, &d.expected_mu_matrix(), ds)?)
        } else {
            None
        };
        let mut channel_reports = Vec::with_capacity(channels);
        for (c, name) in bundle.label_columns.iter().enumerate() {
            let mu = d.expected_mu_channel(c);
            let cov: Vec<Option<f64>> = (0..d.rows).map(|r| d.cov_mu[d.at(r, c)]).collect();
            let defined = d.cov_mu_channel(c);
            channel_reports.push(ChannelReport {
                channel: name.clone(),
                expected_mu: box_stats(&mu, "expected moments")?,
                cov_mu: BoxStats::from_values(&defined),
                undefined_cov_rows: d.rows - defined.len(),
                histogram: dem_histogram_in(&mu, &cov, settings.histogram_bins, ranges[c].0, ranges[c].1)?,
                point_errors: errors.as_ref().map(|e| e[c]),
            });
        }
        let per_row: Vec<RowRecord> = (0..d.rows)
            .map(|r| {
                let span = d.at(r, 0)..d.at(r, 0) + channels;
                RowRecord {
                    timestamp: ds.timestamps()[r],
                    expected_mu: d.expected_mu[span.clone()].to_vec(),
                    cov_mu: d.cov_mu[span.clone()].to_vec(),
                    aleatory_var: d.aleatory_var[span.clone()].to_vec(),
                    epistemic_var: d.epistemic_var[span].to_vec(),
                    r_min: r_min[r],
                    log_likelihood: summary.row_log_likelihoods.as_ref().map(|l| l[r]),
                }
            })
            .collect();
        let pooled: Vec<f64> = d.cov_mu.iter().flatten().copied().collect();
        reports.push(UncertaintyReport {
            schema_version: REPORT_SCHEMA_VERSION,
            turbine_id: ds.turbine_id().to_string(),
            model_kind: bundle.kind,
            input_config: bundle.input_config.id(),
            rows: ds.len(),
            forward_runs: settings.forward_runs,
            seed,
            mean_cov_mu: mean(&pooled),
            mean_r_min: mean(&r_min).unwrap_or(0.0),
            r_min: box_stats(&r_min, "r_min")?,
            expected_log_likelihood: summary.expected_log_likelihood,
            log_likelihood: summary.row_log_likelihoods.as_deref().and_then(BoxStats::from_values),
            channels: channel_reports,
            marginals,
            per_row,
        });
    }
    Ok(reports)
}

/// Per-input marginal densities of every turbine on grids shared with the reference.
pub fn input_marginals(
    bundle: &ModelBundle,
    turbines: &[Dataset],
    reference: &Dataset,
    n_bins: usize,
) -> Result<Vec<Vec<InputMarginal>>> {
    if n_bins == 0 {
        return Err(Error::invalid("marginals need at least one bin"));
    }
    let mut out: Vec<Vec<InputMarginal>> = vec![Vec::new(); turbines.len()];
    for col in &bundle.input_columns {
        let reference_values = reference.column(col)?;
        let mut all = reference_values.to_vec();
        for t in turbines {
            all.extend_from_slice(t.column(col)?);
        }
        let (lo, hi) = finite_range(&all).ok_or_else(|| Error::invalid(format!("no finite values in `{col}`")))?;
        for (t, slot) in turbines.iter().zip(out.iter_mut()) {
            let values = t.column(col)?;
            let no_cov = vec![None; values.len()];
            let hist = dem_histogram_in(values, &no_cov, n_bins, lo, hi)?;
            let ks = ks_two_sample(values, reference_values);
            slot.push(InputMarginal {
                column: col.clone(),
                summary: box_stats(values, col)?,
                lower: hist[0].lower,
                upper: hist[n_bins - 1].upper,
                density: hist.iter().map(|b| b.probability / (b.upper - b.lower)).collect(),
                ks_statistic: ks.statistic,
                ks_p_value: ks.p_value,
            });
        }
    }
    Ok(out)
}
