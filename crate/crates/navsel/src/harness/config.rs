use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::planner::SensingParams;
use crate::replay::{BoundConfig, BoundKind};
use crate::selection::{SelectorConfig, SelectorMode};

use super::HarnessError;

/// Experiment scale: how many scenarios exist, how many trials make one
/// deployment, and how many deployments are aggregated.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Scale {
    pub n_scenarios: usize,
    pub n_trials: usize,
    pub n_deployments: usize,
}

impl Scale {
    /// Full scale: 150 scenarios, 100-trial deployments, 200 deployments.
    pub fn full() -> Self {
        Scale {
            n_scenarios: 150,
            n_trials: 100,
            n_deployments: 200,
        }
    }

    /// Desk scale for fast runs: 40 scenarios, 30 trials, 50 deployments.
    pub fn desk() -> Self {
        Scale {
            n_scenarios: 40,
            n_trials: 30,
            n_deployments: 50,
        }
    }
}

/// Selector settings as they appear in the config file. `mode` is
/// `"ucb"` or `"constrained"`; `bound` is `"opt"`, `"sc"`, or `"wgt"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectorSpec {
    #[serde(default = "default_c")]
    pub c: f64,
    pub mode: String,
    pub bound: String,
    #[serde(default = "default_p_short")]
    pub p_short: f64,
}

fn default_c() -> f64 {
    100.0
}

fn default_p_short() -> f64 {
    0.5
}

pub fn parse_mode(s: &str) -> Result<SelectorMode, HarnessError> {
    match s {
        "ucb" => Ok(SelectorMode::Ucb),
        "constrained" => Ok(SelectorMode::ConstrainedUcb),
        other => Err(HarnessError::Config(format!(
            "unknown selector mode '{other}' (expected 'ucb' or 'constrained')"
        ))),
    }
}

pub fn parse_bound(s: &str) -> Result<BoundKind, HarnessError> {
    match s {
        "opt" => Ok(BoundKind::Optimistic),
        "sc" => Ok(BoundKind::SimplyConnected),
        "wgt" => Ok(BoundKind::Weighted),
        other => Err(HarnessError::Config(format!(
            "unknown bound kind '{other}' (expected 'opt', 'sc', or 'wgt')"
        ))),
    }
}

pub fn bound_token(kind: BoundKind) -> &'static str {
    match kind {
        BoundKind::Optimistic => "opt",
        BoundKind::SimplyConnected => "sc",
        BoundKind::Weighted => "wgt",
    }
}

pub fn mode_token(mode: SelectorMode) -> &'static str {
    match mode {
        SelectorMode::Ucb => "ucb",
        SelectorMode::ConstrainedUcb => "constrained",
    }
}

impl SelectorSpec {
    pub fn to_selector_config(&self) -> Result<SelectorConfig, HarnessError> {
        let mode = parse_mode(&self.mode)?;
        let kind = parse_bound(&self.bound)?;
        if !(0.0..=1.0).contains(&self.p_short) {
            return Err(HarnessError::Config(format!(
                "p_short {} outside [0, 1]",
                self.p_short
            )));
        }
        if self.c < 0.0 {
            return Err(HarnessError::Config(format!(
                "exploration weight c must be non-negative, got {}",
                self.c
            )));
        }
        Ok(SelectorConfig {
            c: self.c,
            mode,
            bound: BoundConfig::new(kind, self.p_short),
        })
    }
}

/// The experiment configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Estimator files, in roster order.
    pub roster: Vec<PathBuf>,
    pub scenario_dir: PathBuf,
    pub sensing: SensingParams,
    pub selector: SelectorSpec,
    /// Defaults to the full preset (150 scenarios, 100 trials, 200
    /// deployments) when omitted.
    #[serde(default = "Scale::full")]
    pub scale: Scale,
    pub master_seed: u64,
    /// Where records, replays, the matrix, logs, and reports land.
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Paired deployments share scenario subsets across selector variants.
    #[serde(default = "default_true")]
    pub paired: bool,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn records_dir(&self) -> PathBuf {
        self.out_dir.join("records")
    }

    pub fn replays_dir(&self) -> PathBuf {
        self.out_dir.join("replays")
    }

    pub fn matrix_path(&self) -> PathBuf {
        self.out_dir.join("matrix.json")
    }

    pub fn logs_dir(&self) -> PathBuf {
        self.out_dir.join("logs")
    }
}
