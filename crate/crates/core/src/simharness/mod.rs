//! Graph generators, data simulators and the Monte Carlo engine.

mod config;
mod experiment;
mod graphs;
mod metrics;
mod seed;
mod simulate;

pub use config::{EstimatorKind, ExperimentConfig, ModelKind, CONFIG_KEYS};
pub use experiment::{
    bounds_csv, bounds_detail_csv, run_experiment, summary_csv, trials_csv, write_outputs,
    ExperimentOutput, SummaryRow, SweepBounds, TrialRecord,
};
pub use graphs::{generate_graph, GraphKind, GraphSpec};
pub use metrics::{metric_mse, metric_re, support_f1};
pub use seed::{mix, splitmix64, trial_seed};
pub use simulate::{
    dc_noise_variance, dc_observations, dc_scenario, diffusion_samples, lgmrf_samples,
    sample_covariance, simulate_dc, simulate_diffusion, simulate_lgmrf,
};
