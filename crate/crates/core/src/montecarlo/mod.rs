//! Monte Carlo experiments: configuration, loadings, replicated inference
//! and output files.

mod config;
mod engine;
mod loading;
mod output;

pub use config::{preset_grid, ExperimentConfig, InitKind, LoadingSpec, ModelKind, SignalKind};
pub use engine::{
    oracle_init, run_experiment, run_pca_experiment, run_regression_experiment,
    ReplicationFailure, ReplicationRecord, SimulationReport, MAX_FAILURE_RATE,
};
pub use loading::{benchmark_spike, build_loading, lowrank_support, spike_vector};
pub use output::{
    config_hash, histogram, histogram_csv, histogram_svg, manifest_line, report_csv,
    sha256_hex, summary_block, write_outputs, HistogramBin, HIST_BINS, HIST_RANGE,
};

pub use crate::stats::ks_statistic;
