//! Mean-field Gaussian variational networks.
//!
//! Every weight and bias carries an independent Gaussian posterior
//! `N(mu, softplus(rho)²)` and a shared zero-mean Gaussian prior. Training
//! minimises the single-sample negative ELBO with reparameterised gradients;
//! prediction draws whole weight realisations from the posterior.

mod gradcheck;
mod layer;
mod net;
mod posterior;
mod predict;
mod train;

pub use gradcheck::bnn_finite_diff_check;
pub use layer::{LayerNoise, RealizedLayer, SamplingMode, VariationalLayer};
pub use net::{BnnNet, Head, NetNoise, Realization};
pub use posterior::{gaussian_kl, kl_normal, GaussianPosterior, GaussianPrior, SIGMA_FLOOR};
pub use predict::{ensemble_fold, predictive_ensemble, PredictiveSampleSet, DEFAULT_FORWARD_RUNS};
pub use train::{bnn_train, BnnTrainOptions, ParamKind, ParamTrace, TrackedParam, WeightStat, WeightStatHistory};
