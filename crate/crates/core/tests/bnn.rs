use fleetwise_core::bnn::{
    bnn_finite_diff_check, bnn_train, gaussian_kl, kl_normal, predictive_ensemble, BnnNet, BnnTrainOptions,
    GaussianPosterior, GaussianPrior, Head, SamplingMode, VariationalLayer,
};
use fleetwise_core::math::{inv_softplus, LN_2PI};
use fleetwise_core::nnet::{Activation, TrainConfig};
use fleetwise_core::rng::{standard_normal, stream, uniform};
use fleetwise_core::stats::{ks_two_sample, mean, variance};
use fleetwise_core::{Matrix, Samples};

fn random_samples(seed: u64, rows: usize, inputs: usize, channels: usize) -> Samples {
    let mut rng = stream(seed, &[1]);
    let x: Vec<f64> = (0..rows * inputs).map(|_| uniform(&mut rng, -1.0, 1.0)).collect();
    let y: Vec<f64> = (0..rows * channels).map(|_| standard_normal(&mut rng)).collect();
    Samples::new(
        Matrix::from_vec(rows, inputs, x).unwrap(),
        Matrix::from_vec(rows, channels, y).unwrap(),
    )
    .unwrap()
}

fn widen_posteriors(net: &mut BnnNet, seed: u64) {
    // Push sigma well above the initial value so rho gradients are not negligible.
    let mut rng = stream(seed, &[2]);
    for layer_params in net.param_groups_mut().chunks_mut(4) {
        for g in [1usize, 3] {
            for v in layer_params[g].iter_mut() {
                *v = inv_softplus(uniform(&mut rng, 0.05, 0.4));
            }
        }
        for v in layer_params[2].iter_mut() {
            *v = uniform(&mut rng, -0.2, 0.2);
        }
    }
}

/// A layer whose every parameter has the given mu and sigma.
fn constant_layer(inputs: usize, outputs: usize, mu: f64, sigma: f64, act: Activation) -> VariationalLayer {
    let rho = GaussianPosterior::from_mu_sigma(mu, sigma).unwrap().rho;
    VariationalLayer::new(
        inputs,
        outputs,
        vec![mu; inputs * outputs],
        vec![rho; inputs * outputs],
        vec![mu; outputs],
        vec![rho; outputs],
        GaussianPrior::standard(),
        act,
        SamplingMode::SharedEps,
    )
    .unwrap()
}

#[test]
fn zero_noise_realization_equals_means() {
    let mut rng = stream(3, &[]);
    let net = BnnNet::init(3, &[4], 1, Head::Aleatoric, GaussianPrior::standard(), SamplingMode::SharedEps, &mut rng)
        .unwrap();
    for (layer, noise) in net.layers().iter().zip(net.zero_noise(1)) {
        let r = layer.realize(&noise);
        assert_eq!(r.weights, layer.weight_mu());
        assert_eq!(r.biases, layer.bias_mu());
    }
}

#[test]
fn standard_normal_weight_draws() {
    let layer = constant_layer(1, 1, 0.0, 1.0, Activation::Identity);
    let mut rng = stream(11, &[]);
    let draws: Vec<f64> = (0..100_000).map(|_| layer.sample_weights(&mut rng).weights[0]).collect();
    assert!(mean(&draws).abs() < 0.02);
    assert!((variance(&draws) - 1.0).abs() < 0.05);
}

#[test]
fn flipout_rows_differ_but_marginal_matches() {
    // With x = 1 and the bias held at its mean, output - 0.3 is the weight row r saw.
    let mut layer = constant_layer(1, 1, 0.3, 0.5, Activation::Identity);
    layer.set_sampling(SamplingMode::Flipout);
    let mut shared = layer.clone();
    shared.set_sampling(SamplingMode::SharedEps);
    let x = Matrix::from_vec(2, 1, vec![1.0, 1.0]).unwrap();
    let mut rng = stream(5, &[]);
    let mut flip = Vec::new();
    let mut base = Vec::new();
    let mut differ = 0;
    for _ in 0..5000 {
        let mut noise = layer.sample_noise(2, &mut rng);
        noise.bias_eps[0] = 0.0;
        let net = BnnNet::new(vec![layer.clone()], Head::Epistemic { sigma_fixed: 1.0 }).unwrap();
        let (mu, _) = net.forward_with_noise(&x, &vec![noise]).unwrap();
        let w: Vec<f64> = mu.as_slice().iter().map(|v| v - 0.3).collect();
        if (w[0] - w[1]).abs() > 1e-12 {
            differ += 1;
        }
        flip.push(w[0]);
        base.push(shared.sample_weights(&mut rng).weights[0]);
    }
    assert!(differ > 2000, "rows differed only {differ} times");
    let ks = ks_two_sample(&flip, &base);
    assert!(ks.p_value > 0.01, "p = {}", ks.p_value);
}

#[test]
fn kl_identities() {
    let q = [GaussianPosterior::from_mu_sigma(0.0, 1.0).unwrap()];
    assert!(gaussian_kl(&q, &GaussianPrior::standard()).abs() < 1e-9);
    let q = [GaussianPosterior::from_mu_sigma(1.0, 1.0).unwrap()];
    assert!((gaussian_kl(&q, &GaussianPrior::standard()) - 0.5).abs() < 1e-9);
    assert!(kl_normal(0.3, 0.2, -0.1, 0.7) > 0.0);
}

#[test]
fn degenerate_posterior_forward_is_repeatable() {
    let net = BnnNet::new(
        vec![
            constant_layer(2, 3, 0.0, 1.1e-6, Activation::Relu),
            constant_layer(3, 4, 0.0, 1.1e-6, Activation::Identity),
        ],
        Head::Aleatoric,
    )
    .unwrap();
    let mut a = stream(1, &[]);
    let mut b = stream(2, &[]);
    let (mu1, s1) = net.forward_sample(&[0.5, -0.2], &mut a).unwrap();
    let (mu2, s2) = net.forward_sample(&[0.5, -0.2], &mut b).unwrap();
    for c in 0..2 {
        assert!(mu1[c].abs() < 1e-4 && (mu1[c] - mu2[c]).abs() < 1e-4);
        assert!((s1[c] - core::f64::consts::LN_2).abs() < 1e-4);
        assert!((s1[c] - s2[c]).abs() < 1e-4);
    }
    assert!(net.forward_sample(&[1.0], &mut a).is_err());
}

#[test]
fn elbo_at_mode_with_unit_sigma() {
    // Posteriors equal the N(0, 1) prior, zero noise puts every output at 0 = label.
    let layer = constant_layer(3, 2, 0.0, 1.0, Activation::Identity);
    let net = BnnNet::new(vec![layer], Head::Epistemic { sigma_fixed: 1.0 }).unwrap();
    assert!(net.kl().abs() < 1e-12);
    let batch = Samples::new(Matrix::zeros(5, 3), Matrix::zeros(5, 2)).unwrap();
    let loss = net.loss_with_noise(&batch, &net.zero_noise(5), 1.0).unwrap();
    assert!((loss - 5.0 * 2.0 * 0.5 * LN_2PI).abs() < 1e-9, "{loss}");
}

#[test]
fn elbo_matches_closed_form_nll() {
    let net = BnnNet::new(
        vec![constant_layer(1, 1, 0.0, 1e-3, Activation::Identity)],
        Head::Epistemic { sigma_fixed: 3.0 },
    )
    .unwrap();
    let batch = Samples::new(Matrix::zeros(2, 1), Matrix::from_vec(2, 1, vec![1.0, -2.0]).unwrap()).unwrap();
    let loss = net.loss_with_noise(&batch, &net.zero_noise(2), 0.0).unwrap();
    let expected: f64 = [1.0f64, -2.0]
        .iter()
        .map(|y| 0.5 * LN_2PI + 3.0f64.ln() + y * y / 18.0)
        .sum();
    assert!((loss - expected).abs() < 1e-12);
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..20u64 {
        for (head, mode) in [
            (Head::Aleatoric, SamplingMode::SharedEps),
            (Head::Aleatoric, SamplingMode::Flipout),
            (Head::Epistemic { sigma_fixed: 0.7 }, SamplingMode::Flipout),
        ] {
            let mut rng = stream(seed, &[9]);
            let prior = GaussianPrior::new(0.0, 0.8).unwrap();
            let mut net = BnnNet::init(3, &[5, 4], 2, head, prior, mode, &mut rng).unwrap();
            widen_posteriors(&mut net, seed);
            let batch = random_samples(seed, 6, 3, 2);
            let noise = net.sample_noise(6, &mut rng);
            let err = bnn_finite_diff_check(&net, &batch, &noise, 0.05, 1e-6).unwrap();
            assert!(err < 1e-3, "seed {seed} {head:?} {mode:?}: {err}");
        }
    }
}

#[test]
fn zero_epochs_leaves_net_unchanged() {
    let mut rng = stream(4, &[]);
    let net = BnnNet::init(2, &[3], 1, Head::Aleatoric, GaussianPrior::standard(), SamplingMode::Flipout, &mut rng)
        .unwrap();
    let cfg = TrainConfig {
        max_epochs: 0,
        ..TrainConfig::bnn_default()
    };
    let (out, hist, stats) = bnn_train(&net, &random_samples(1, 10, 2, 1), None, &cfg, &BnnTrainOptions::default())
        .unwrap();
    assert_eq!(out, net);
    assert!(hist.epochs.is_empty());
    assert_eq!(stats.traces[0].stats.len(), 1);
}

#[test]
fn ensemble_shapes_and_degenerate_variance() {
    let net = BnnNet::new(
        vec![
            constant_layer(2, 3, 0.1, 1.1e-6, Activation::Relu),
            constant_layer(3, 2, 0.2, 1.1e-6, Activation::Identity),
        ],
        Head::Aleatoric,
    )
    .unwrap();
    let x = Matrix::from_rows(&[[0.5, 1.0], [2.0, -1.0]]).unwrap();
    let one = predictive_ensemble(&net, &x, 1, 3).unwrap();
    assert_eq!(one.n_f(), 1);
    let many = predictive_ensemble(&net, &x, 50, 3).unwrap();
    for r in 0..2 {
        assert!(variance(&many.mu_draws(r, 0)) < 1e-10);
    }
    assert_eq!(predictive_ensemble(&net, &x, 50, 3).unwrap(), many);
    assert!(predictive_ensemble(&net, &x, 0, 3).is_err());
}

#[test]
fn learns_heteroscedastic_noise() {
    let mut rng = stream(40, &[]);
    let sd = |x: f64| 0.1 + 0.1 * x * x;
    let x: Vec<f64> = (0..5000).map(|_| uniform(&mut rng, -3.0, 3.0)).collect();
    let y: Vec<f64> = x.iter().map(|&v| v.sin() + sd(v) * standard_normal(&mut rng)).collect();
    let train = Samples::new(
        Matrix::from_vec(x.len(), 1, x.clone()).unwrap(),
        Matrix::from_vec(y.len(), 1, y).unwrap(),
    )
    .unwrap();
    let net = BnnNet::init(1, &[24, 24], 1, Head::Aleatoric, GaussianPrior::standard(), SamplingMode::Flipout, &mut rng)
        .unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.01,
        batch_size: 128,
        max_epochs: 150,
        early_stop: None,
        seed: 41,
        ..TrainConfig::bnn_default()
    };
    let (trained, _, _) = bnn_train(&net, &train, None, &cfg, &BnnTrainOptions::default()).unwrap();
    let grid: Vec<f64> = (0..61).map(|k| -3.0 + 0.1 * k as f64).collect();
    let set = predictive_ensemble(&trained, &Matrix::from_vec(grid.len(), 1, grid.clone()).unwrap(), 200, 42).unwrap();
    let learned: Vec<f64> = (0..grid.len()).map(|r| mean(&set.sigma_draws(r, 0))).collect();
    let truth: Vec<f64> = grid.iter().map(|&v| sd(v)).collect();
    let rho = fleetwise_core::stats::spearman(&learned, &truth);
    assert!(rho > 0.8, "{rho}");
}

#[test]
fn ensemble_mean_is_stable_across_reseeds() {
    let mut rng = stream(50, &[]);
    let mut net = BnnNet::init(3, &[8], 1, Head::Aleatoric, GaussianPrior::standard(), SamplingMode::Flipout, &mut rng)
        .unwrap();
    widen_posteriors(&mut net, 51);
    let x = Matrix::from_rows(&[[0.2, -0.4, 0.9]]).unwrap();
    let n_f = 10_000;
    let a = predictive_ensemble(&net, &x, n_f, 1).unwrap().mu_draws(0, 0);
    let b = predictive_ensemble(&net, &x, n_f, 2).unwrap().mu_draws(0, 0);
    let sd = variance(&a).sqrt();
    assert!(sd > 0.0);
    // Two independent means differ by sd·sqrt(2/N_f) in standard deviation.
    assert!((mean(&a) - mean(&b)).abs() <= 3.0 * sd * (2.0 / n_f as f64).sqrt());
}
