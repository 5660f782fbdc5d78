//! Experiment drivers: training, input sweep, collection-period study,
//! farm-wide deployment and model comparison.

pub mod export;
mod experiments;
mod report;
mod selfcheck;
mod train;

pub use experiments::{
    compare_models, compare_trained, ensemble_seed, first_months, input_sweep, period_study, train_test_split,
    ComparisonTable, KindMetrics, PeriodEntry, PeriodStudyResult, SweepEntry, SweepResult, TurbineComparison,
};
pub use report::{
    deploy_farm, dem_histogram, dem_histogram_in, input_marginals, ChannelReport, HistogramBin, InputMarginal,
    RowRecord, UncertaintyReport, REPORT_SCHEMA_VERSION,
};
pub use selfcheck::{selfcheck, CheckOutcome, SelfcheckReport};
pub use train::{
    channel_errors, point_predictions, raw_labels, run_ensemble, scaled_inputs, train_model, EnsembleSummary, Trained,
};
