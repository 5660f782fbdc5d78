//! Monitoring datasets, scaling, splits, input configurations and the
//! synthetic wind-farm generator.

mod dataset;
mod scaler;
pub mod schema;
mod split;
pub mod synth;
pub mod time;

pub use dataset::Dataset;
pub use scaler::Scaler;
pub use schema::{select_inputs, AccelLevel, InputConfig};
pub use split::{split, split_dataset, split_indices};
pub use synth::{synth_farm, synth_load_series, synth_turbine, FarmSpec, TurbineSpec};
