//! Replicate orchestration, output tables and the verification suites.

mod config;
mod emit;
mod run;
mod verify;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::cmj::CmjError;
use crate::malthus::MalthusError;
use crate::rates::RatesError;

pub use config::{ExperimentConfig, Grid, Mode, OutputPaths, DEFAULT_REPLICATES};
pub use emit::{
    read_trajectory_csv, summary_json, write_plot_data, write_summary_csv, write_trajectory_csv, CMJ_COLUMNS,
    DISCRETE_COLUMNS,
};
pub use run::{
    run_experiment, simulate_trajectories, ExperimentOutput, ExperimentSummary, MetricStat, Persistence, SummaryRow,
    TrajectoryRow, LAMBDA_TOL,
};
pub use verify::{cmj_outcome_law, mdp_setup, run_suite, tv_noise_floor, Check, Suite, VerifyOptions, VerifyReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Cmj(#[from] CmjError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Malthus(#[from] MalthusError),
    #[error(transparent)]
    Rates(#[from] RatesError),
}
