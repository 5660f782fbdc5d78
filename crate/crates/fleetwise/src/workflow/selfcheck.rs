use fleetwise_core::bnn::{bnn_finite_diff_check, kl_normal, BnnNet, GaussianPrior, Head, PredictiveSampleSet, SamplingMode};
use fleetwise_core::fatigue::{bin_cycles, dem, rainflow_count, rainflow_cycles, LoadSeries, SnParams, DEFAULT_BINS};
use fleetwise_core::math::gaussian_log_pdf;
use fleetwise_core::metrics::decompose;
use fleetwise_core::nnet::{finite_diff_check, DenseNet, Loss};
use fleetwise_core::rng::{standard_normal, stream, uniform};
use fleetwise_core::{Matrix, Samples};
use serde::{Deserialize, Serialize};

use crate::error::Result;

const KL_TAG: u64 = 1;
const GRAD_TAG: u64 = 2;
const LEDGER_TAG: u64 = 3;
const RAINFLOW_TAG: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    /// Worst observed error of the check.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn new(name: &str, worst: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            worst,
            tolerance,
            passed: worst <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfcheckReport {
    pub schema_version: u32,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

/// Runs the internal numerical oracles: closed-form KL against Monte Carlo,
/// analytic gradients against central differences, the variance ledger and
/// binned rainflow damage against the unbinned cycles.
pub fn selfcheck(seed: u64) -> Result<SelfcheckReport> {
    let checks = vec![
        kl_check(seed),
        dnn_gradient_check(seed)?,
        bnn_gradient_check(seed)?,
        ledger_check(seed)?,
        dem_check()?,
        rainflow_check(seed)?,
    ];
    Ok(SelfcheckReport {
        schema_version: 1,
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

fn kl_check(seed: u64) -> CheckOutcome {
    let draws = 200_000;
    let mut worst: f64 = 0.0;
    for pair in 0..5u64 {
        let mut rng = stream(seed, &[KL_TAG, pair]);
        let (mu_q, sd_q) = (uniform(&mut rng, -1.0, 1.0), uniform(&mut rng, 0.3, 2.0));
        let (mu_p, sd_p) = (uniform(&mut rng, -0.5, 0.5), uniform(&mut rng, 0.5, 1.5));
        let exact = kl_normal(mu_q, sd_q, mu_p, sd_p);
        let mut acc = 0.0;
        for _ in 0..draws {
            let x = mu_q + sd_q * standard_normal(&mut rng);
            acc += gaussian_log_pdf(x, mu_q, sd_q) - gaussian_log_pdf(x, mu_p, sd_p);
        }
        let estimate = acc / draws as f64;
        // Small divergences are compared on an absolute scale.
        worst = worst.max((estimate - exact).abs() / exact.max(0.1));
    }
    CheckOutcome::new("kl_closed_form_vs_monte_carlo", worst, 0.03)
}

fn random_batch(seed: u64, rows: usize, inputs: usize, outputs: usize) -> Result<Samples> {
    let mut rng = stream(seed, &[GRAD_TAG, 0]);
    let x: Vec<f64> = (0..rows * inputs).map(|_| standard_normal(&mut rng)).collect();
    let y: Vec<f64> = (0..rows * outputs).map(|_| standard_normal(&mut rng)).collect();
    Ok(Samples::new(Matrix::from_vec(rows, inputs, x)?, Matrix::from_vec(rows, outputs, y)?)?)
}

fn dnn_gradient_check(seed: u64) -> Result<CheckOutcome> {
    let batch = random_batch(seed, 6, 3, 2)?;
    let mut worst: f64 = 0.0;
    for k in 0..5u64 {
        let mut rng = stream(seed, &[GRAD_TAG, 1, k]);
        let mut net = DenseNet::init(3, &[5, 4], 2, &mut rng)?;
        // Zero biases put rows with every upstream unit off exactly on a ReLU kink.
        for (g, params) in net.param_groups_mut().into_iter().enumerate() {
            if g % 2 == 1 {
                params.iter_mut().for_each(|b| *b = uniform(&mut rng, -0.5, 0.5));
            }
        }
        worst = worst.max(finite_diff_check(&net, &batch, 1e-6, Loss::Mae)?);
    }
    Ok(CheckOutcome::new("dnn_mae_gradient_vs_finite_difference", worst, 1e-3))
}

fn bnn_gradient_check(seed: u64) -> Result<CheckOutcome> {
    let batch = random_batch(seed, 5, 3, 2)?;
    let mut worst: f64 = 0.0;
    for k in 0..5u64 {
        let mut rng = stream(seed, &[GRAD_TAG, 2, k]);
        let net = BnnNet::init(3, &[4], 2, Head::Aleatoric, GaussianPrior::standard(), SamplingMode::Flipout, &mut rng)?;
        let noise = net.sample_noise(batch.len(), &mut rng);
        worst = worst.max(bnn_finite_diff_check(&net, &batch, &noise, 0.1, 1e-6)?);
    }
    Ok(CheckOutcome::new("bnn_elbo_gradient_vs_finite_difference", worst, 1e-3))
}

fn ledger_check(seed: u64) -> Result<CheckOutcome> {
    let (rows, channels, n_f) = (20, 2, 50);
    let mut rng = stream(seed, &[LEDGER_TAG]);
    let mu: Vec<f64> = (0..rows * channels * n_f).map(|_| 3.0 * standard_normal(&mut rng)).collect();
    let sigma: Vec<f64> = (0..rows * channels * n_f).map(|_| uniform(&mut rng, 0.01, 2.0)).collect();
    let d = decompose(&PredictiveSampleSet::new(rows, channels, n_f, mu, sigma)?)?;
    let worst = d
        .total_var
        .iter()
        .zip(d.aleatory_var.iter().zip(&d.epistemic_var))
        .map(|(t, (a, e))| (a + e - t).abs() / t.abs())
        .fold(0.0, f64::max);
    Ok(CheckOutcome::new("total_variance_ledger", worst, 1e-12))
}

fn dem_check() -> Result<CheckOutcome> {
    let (range, cycles) = (3.5, 1000usize);
    let mut x = Vec::with_capacity(2 * cycles + 1);
    for k in 0..=2 * cycles {
        x.push(if k % 2 == 0 { -range / 2.0 } else { range / 2.0 });
    }
    let sn = SnParams {
        n_eq: cycles as f64,
        ..SnParams::default()
    };
    let spec = rainflow_count(&LoadSeries::new(x, 1.0)?, DEFAULT_BINS)?;
    Ok(CheckOutcome::new("triangle_wave_dem", (dem(&spec, &sn) - range).abs() / range, 1e-9))
}

fn rainflow_check(seed: u64) -> Result<CheckOutcome> {
    let sn = SnParams::default();
    let mut worst: f64 = 0.0;
    for k in 0..5u64 {
        let mut rng = stream(seed, &[RAINFLOW_TAG, k]);
        let mut level = 0.0;
        let x: Vec<f64> = (0..5000)
            .map(|_| {
                level = 0.9 * level + standard_normal(&mut rng);
                level
            })
            .collect();
        let cycles = rainflow_cycles(&x);
        let unbinned: f64 = cycles.iter().map(|c| c.count * c.range.powf(sn.m)).sum();
        let binned = bin_cycles(&cycles, DEFAULT_BINS).moment_sum(sn.m);
        worst = worst.max((binned - unbinned).abs() / unbinned);
    }
    Ok(CheckOutcome::new("binned_vs_unbinned_rainflow_damage", worst, 0.01))
}
