//! End-to-end experiment orchestration.
//!
//! The pipeline has four stages, each resumable and deterministic given the
//! master seed:
//!
//! 1. `generate_scenarios` — seeded environment files plus a manifest.
//! 2. `precompute` — every (policy, scenario) trial run once and recorded,
//!    then every ordered (deployed, alternative) pair replayed once; costs
//!    land in a [`CostMatrix`], replay bounds in a [`ReplayCache`].
//! 3. `run_deployments` — Monte-Carlo deployments that sample scenario
//!    subsets and run a selector over precomputed lookups, emitting one
//!    JSON-lines trial log per deployment.
//! 4. `report` — per-trial-index means and 10th/90th percentile bands for
//!    average cost and cumulative regret, plus per-policy single-policy
//!    means, written as CSV.
//!
//! Precompute parallelizes over (policy, scenario) tasks and deployments
//! parallelize over seeds; every task writes only its own outputs, so the
//! emitted files are identical no matter the thread count.

mod config;
mod deploy;
mod precompute;
mod report;
pub mod seeds;

pub use config::{
    bound_token, mode_token, parse_bound, parse_mode, ExperimentConfig, Scale, SelectorSpec,
};
pub use deploy::{run_deployments, run_one_deployment};
pub use precompute::{
    generate_scenarios, precompute, CostMatrix, MatrixEntry, PrecomputeSummary, ReplayCache,
};
pub use report::{report, write_report_csvs, ConfigReport, DeploymentReport, SeriesPoint};

use thiserror::Error;

use crate::envgen::EnvGenError;
use crate::estimators::EstimatorError;
use crate::planner::PlannerError;
use crate::replay::ReplayError;
use crate::selection::SelectionError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("replay cache has no outcome for policy '{policy}' on '{scenario}'")]
    IncompleteCache { policy: String, scenario: String },
    #[error("no deployment logs found")]
    EmptyLogs,
    #[error(transparent)]
    EnvGen(#[from] EnvGenError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
