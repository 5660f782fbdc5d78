//! Point errors, predictive log-likelihood, variance decomposition and
//! nearest-neighbour distances.

use alloc::vec;
use alloc::vec::Vec;

use crate::bnn::PredictiveSampleSet;
use crate::math::{gaussian_log_pdf, sqrt};
use crate::rng::{standard_normal, stream};
use crate::{Error, Matrix, Result};

/// Expectations smaller than this in magnitude leave `cov_mu` undefined.
pub const COV_MU_MIN_EXPECTATION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointErrors {
    pub mae: f64,
    pub rmse: f64,
    /// Mean of `100·|pred − label| / |label|` over rows with nonzero labels.
    pub percent_error: Option<f64>,
    /// Rows left out of the percent error because their label is 0.
    pub excluded_rows: usize,
}

pub fn point_errors(pred: &[f64], label: &[f64]) -> Result<PointErrors> {
    if pred.len() != label.len() {
        return Err(Error::dims("predictions", label.len(), pred.len()));
    }
    if pred.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let n = pred.len() as f64;
    let (mut abs, mut sq, mut pct, mut kept) = (0.0, 0.0, 0.0, 0usize);
    for (&p, &y) in pred.iter().zip(label) {
        let e = p - y;
        abs += e.abs();
        sq += e * e;
        if y != 0.0 {
            pct += 100.0 * e.abs() / y.abs();
            kept += 1;
        }
    }
    Ok(PointErrors {
        mae: abs / n,
        rmse: sqrt(sq / n),
        percent_error: (kept > 0).then(|| pct / kept as f64),
        excluded_rows: pred.len() - kept,
    })
}

/// [`point_errors`] for every column of two equally shaped matrices.
pub fn point_errors_by_channel(pred: &Matrix, label: &Matrix) -> Result<Vec<PointErrors>> {
    if pred.rows() != label.rows() || pred.cols() != label.cols() {
        return Err(Error::dims("prediction shape", label.rows() * label.cols(), pred.rows() * pred.cols()));
    }
    (0..pred.cols())
        .map(|c| point_errors(&pred.column(c), &label.column(c)))
        .collect()
}

fn check_labels(samples: &PredictiveSampleSet, labels: &Matrix) -> Result<()> {
    if labels.rows() != samples.rows() || labels.cols() != samples.channels() {
        return Err(Error::dims(
            "labels",
            samples.rows() * samples.channels(),
            labels.rows() * labels.cols(),
        ));
    }
    Ok(())
}

/// Per-row log-likelihood, averaged over draws and summed over channels.
pub fn row_log_likelihoods(samples: &PredictiveSampleSet, labels: &Matrix) -> Result<Vec<f64>> {
    check_labels(samples, labels)?;
    let n_f = samples.n_f();
    Ok((0..samples.rows())
        .map(|r| {
            let y = labels.row(r);
            let mut acc = 0.0;
            for s in 0..n_f {
                for (c, &yc) in y.iter().enumerate() {
                    acc += gaussian_log_pdf(yc, samples.mu(r, s, c), samples.sigma(r, s, c));
                }
            }
            acc / n_f as f64
        })
        .collect())
}

/// `(1/N)(1/N_f) Σ_rows Σ_draws log N(y; mu, sigma)`, channels treated jointly.
pub fn expected_log_likelihood(samples: &PredictiveSampleSet, labels: &Matrix) -> Result<f64> {
    if samples.rows() == 0 {
        return Err(Error::Empty("predictive rows"));
    }
    let rows = row_log_likelihoods(samples, labels)?;
    Ok(rows.iter().sum::<f64>() / rows.len() as f64)
}

/// Law-of-total-variance split of an ensemble. All vectors are row-major
/// `rows x channels`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UncertaintyDecomposition {
    pub rows: usize,
    pub channels: usize,
    pub expected_y: Vec<f64>,
    /// `aleatory_var + epistemic_var`
    pub total_var: Vec<f64>,
    /// Mean of `sigma²` over draws.
    pub aleatory_var: Vec<f64>,
    /// Population variance of `mu` over draws.
    pub epistemic_var: Vec<f64>,
    pub expected_mu: Vec<f64>,
    /// `sqrt(epistemic_var) / |expected_mu|`, `None` when the expectation is ~0.
    pub cov_mu: Vec<Option<f64>>,
}

impl UncertaintyDecomposition {
    fn from_moments(rows: usize, channels: usize, mean_mu: Vec<f64>, var_mu: Vec<f64>, mean_s2: Vec<f64>) -> Self {
        let total_var = mean_s2.iter().zip(&var_mu).map(|(a, e)| a + e).collect();
        let cov_mu = mean_mu.iter().zip(&var_mu).map(|(&m, &v)| cov(m, v)).collect();
        Self {
            rows,
            channels,
            expected_y: mean_mu.clone(),
            total_var,
            aleatory_var: mean_s2,
            epistemic_var: var_mu,
            expected_mu: mean_mu,
            cov_mu,
        }
    }

    pub fn at(&self, row: usize, channel: usize) -> usize {
        row * self.channels + channel
    }

    /// `cov_mu` of one channel, undefined entries dropped.
    pub fn cov_mu_channel(&self, channel: usize) -> Vec<f64> {
        (0..self.rows).filter_map(|r| self.cov_mu[self.at(r, channel)]).collect()
    }

    pub fn expected_mu_channel(&self, channel: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.expected_mu[self.at(r, channel)]).collect()
    }

    pub fn expected_mu_matrix(&self) -> Matrix {
        Matrix::from_vec(self.rows, self.channels, self.expected_mu.clone()).expect("shape matches")
    }
}

fn cov(mean: f64, var: f64) -> Option<f64> {
    (mean.abs() >= COV_MU_MIN_EXPECTATION).then(|| sqrt(var) / mean.abs())
}

/// Decomposes predictive variance with the analytic total `E[sigma²] + V(mu)`.
pub fn decompose(samples: &PredictiveSampleSet) -> Result<UncertaintyDecomposition> {
    let n_f = samples.n_f();
    if n_f < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n_f });
    }
    let (rows, channels) = (samples.rows(), samples.channels());
    let len = rows * channels;
    let (mut mean_mu, mut var_mu, mut mean_s2) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    for r in 0..rows {
        for c in 0..channels {
            let k = r * channels + c;
            let (mut m, mut s2) = (0.0, 0.0);
            for s in 0..n_f {
                m += samples.mu(r, s, c);
                let sd = samples.sigma(r, s, c);
                s2 += sd * sd;
            }
            m /= n_f as f64;
            let mut v = 0.0;
            for s in 0..n_f {
                let d = samples.mu(r, s, c) - m;
                v += d * d;
            }
            mean_mu[k] = m;
            var_mu[k] = v / n_f as f64;
            mean_s2[k] = s2 / n_f as f64;
        }
    }
    Ok(UncertaintyDecomposition::from_moments(rows, channels, mean_mu, var_mu, mean_s2))
}

/// Total variance from explicit draws `y = mu + sigma·z`, one `z` per draw.
/// Converges to the analytic total as `n_f` grows.
pub fn draw_based_total_variance(samples: &PredictiveSampleSet, seed: u64) -> Result<Vec<f64>> {
    let n_f = samples.n_f();
    if n_f < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n_f });
    }
    let channels = samples.channels();
    let mut out = Vec::with_capacity(samples.rows() * channels);
    let mut ys = vec![0.0; n_f];
    for r in 0..samples.rows() {
        for c in 0..channels {
            let mut rng = stream(seed, &[r as u64, c as u64]);
            for (s, y) in ys.iter_mut().enumerate() {
                *y = samples.mu(r, s, c) + samples.sigma(r, s, c) * standard_normal(&mut rng);
            }
            out.push(crate::stats::variance(&ys));
        }
    }
    Ok(out)
}

/// Streaming counterpart of [`decompose`] and [`expected_log_likelihood`]
/// that never stores the individual draws.
#[derive(Debug, Clone)]
pub struct EnsembleAccumulator {
    rows: usize,
    channels: usize,
    draws: usize,
    mean_mu: Vec<f64>,
    m2_mu: Vec<f64>,
    sum_s2: Vec<f64>,
    log_lik: Option<(Matrix, Vec<f64>)>,
}

impl EnsembleAccumulator {
    /// `labels`, when given, enables the expected log-likelihood.
    pub fn new(rows: usize, channels: usize, labels: Option<&Matrix>) -> Result<Self> {
        if let Some(y) = labels {
            if y.rows() != rows || y.cols() != channels {
                return Err(Error::dims("labels", rows * channels, y.rows() * y.cols()));
            }
        }
        let len = rows * channels;
        Ok(Self {
            rows,
            channels,
            draws: 0,
            mean_mu: vec![0.0; len],
            m2_mu: vec![0.0; len],
            sum_s2: vec![0.0; len],
            log_lik: labels.map(|y| (y.clone(), vec![0.0; rows])),
        })
    }

    /// Adds one draw for every row.
    pub fn push(&mut self, mu: &Matrix, sigma: &Matrix) -> Result<()> {
        let len = self.rows * self.channels;
        if mu.as_slice().len() != len || sigma.as_slice().len() != len {
            return Err(Error::dims("draw shape", len, mu.as_slice().len()));
        }
        if sigma.as_slice().iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid("predictive sigma must be positive"));
        }
        self.draws += 1;
        let n = self.draws as f64;
        for (k, (&m, &s)) in mu.as_slice().iter().zip(sigma.as_slice()).enumerate() {
            let delta = m - self.mean_mu[k];
            self.mean_mu[k] += delta / n;
            self.m2_mu[k] += delta * (m - self.mean_mu[k]);
            self.sum_s2[k] += s * s;
        }
        if let Some((y, acc)) = &mut self.log_lik {
            for r in 0..self.rows {
                let (yr, mr, sr) = (y.row(r), mu.row(r), sigma.row(r));
                for c in 0..self.channels {
                    acc[r] += gaussian_log_pdf(yr[c], mr[c], sr[c]);
                }
            }
        }
        Ok(())
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn decomposition(&self) -> Result<UncertaintyDecomposition> {
        if self.draws < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: self.draws,
            });
        }
        let n = self.draws as f64;
        Ok(UncertaintyDecomposition::from_moments(
            self.rows,
            self.channels,
            self.mean_mu.clone(),
            self.m2_mu.iter().map(|v| v / n).collect(),
            self.sum_s2.iter().map(|v| v / n).collect(),
        ))
    }

    /// Per-row log-likelihood averaged over draws; `None` without labels.
    pub fn row_log_likelihoods(&self) -> Option<Vec<f64>> {
        let n = self.draws.max(1) as f64;
        self.log_lik.as_ref().map(|(_, acc)| acc.iter().map(|v| v / n).collect())
    }

    pub fn expected_log_likelihood(&self) -> Option<f64> {
        let rows = self.row_log_likelihoods()?;
        (!rows.is_empty() && self.draws > 0).then(|| rows.iter().sum::<f64>() / rows.len() as f64)
    }
}

/// Distance from each test row to its nearest training row.
pub fn min_euclidean_distance(test: &Matrix, train: &Matrix) -> Result<Vec<f64>> {
    if train.rows() == 0 {
        return Err(Error::Empty("training rows"));
    }
    if test.cols() != train.cols() {
        return Err(Error::dims("feature width", train.cols(), test.cols()));
    }
    Ok(test
        .iter_rows()
        .map(|x| {
            let best = train.iter_rows().fold(f64::INFINITY, |best, t| {
                let mut d = 0.0;
                for (a, b) in x.iter().zip(t) {
                    let e = a - b;
                    d += e * e;
                    if d >= best {
                        break;
                    }
                }
                d.min(best)
            });
            sqrt(best)
        })
        .collect())
}
