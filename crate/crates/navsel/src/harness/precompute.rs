use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envgen::Scenario;
use crate::estimators::Estimator;
use crate::planner::{navigate_trial, RecordFile, TrialConfig};
use crate::replay::{replay_policy, ReplayRow};
use crate::selection::CostLookup;

use super::{ExperimentConfig, HarnessError};

/// One precomputed trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub policy: String,
    pub scenario_id: String,
    pub cost: f64,
    pub reached: bool,
    pub record_file: String,
}

/// Complete (policy x scenario) table of precomputed trial costs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostMatrix {
    pub policies: Vec<String>,
    pub scenarios: Vec<String>,
    pub entries: Vec<MatrixEntry>,
}

impl CostMatrix {
    pub fn get(&self, policy: &str, scenario_id: &str) -> Option<&MatrixEntry> {
        self.entries
            .iter()
            .find(|e| e.policy == policy && e.scenario_id == scenario_id)
    }

    /// Mean cost per policy, over all scenarios in the matrix.
    pub fn policy_means(&self) -> BTreeMap<String, f64> {
        let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for e in &self.entries {
            let s = sums.entry(e.policy.clone()).or_insert((0.0, 0));
            s.0 += e.cost;
            s.1 += 1;
        }
        sums.into_iter()
            .map(|(p, (sum, n))| (p, sum / n as f64))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

impl CostLookup for CostMatrix {
    fn cost(&self, policy: &str, scenario_id: &str) -> Option<f64> {
        self.get(policy, scenario_id).map(|e| e.cost)
    }
}

/// Replay-outcome cache: (deployed policy, scenario) -> per-alt rows.
#[derive(Debug, Clone, Default)]
pub struct ReplayCache {
    rows: BTreeMap<(String, String), Vec<ReplayRow>>,
}

impl ReplayCache {
    pub fn insert(&mut self, row: ReplayRow) {
        self.rows
            .entry((row.deployed_policy.clone(), row.scenario_id.clone()))
            .or_default()
            .push(row);
    }

    pub fn outcomes(&self, deployed: &str, scenario_id: &str) -> Option<&[ReplayRow]> {
        self.rows
            .get(&(deployed.to_string(), scenario_id.to_string()))
            .map(|v| v.as_slice())
    }

    pub fn all_rows(&self) -> impl Iterator<Item = &ReplayRow> {
        self.rows.values().flatten()
    }

    pub fn load_dir(dir: &Path) -> Result<Self, HarnessError> {
        let mut cache = ReplayCache::default();
        if !dir.exists() {
            return Ok(cache);
        }
        let mut paths: Vec<_> = fs::read_dir(dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        paths.sort();
        for path in paths {
            if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                continue;
            }
            for line in fs::read_to_string(&path)?.lines() {
                if !line.trim().is_empty() {
                    cache.insert(serde_json::from_str(line)?);
                }
            }
        }
        Ok(cache)
    }
}

/// What precompute did (and skipped thanks to the cache).
#[derive(Debug, Clone, Default)]
pub struct PrecomputeSummary {
    pub trials_computed: usize,
    pub trials_cached: usize,
    pub replays_computed: usize,
    pub replays_cached: usize,
    /// Diagonal self-replays whose trajectory diverged (should stay zero).
    pub self_replay_mismatches: usize,
}

pub(crate) fn load_roster(config: &ExperimentConfig) -> Result<Vec<Estimator>, HarnessError> {
    if config.roster.is_empty() {
        return Err(HarnessError::Config("empty roster".into()));
    }
    config
        .roster
        .iter()
        .map(|p| Estimator::load(p).map_err(HarnessError::from))
        .collect()
}

pub(crate) fn load_scenarios(config: &ExperimentConfig) -> Result<Vec<Scenario>, HarnessError> {
    let mut scenarios = crate::envgen::load_scenario_dir(&config.scenario_dir)?;
    if scenarios.len() < config.scale.n_scenarios {
        return Err(HarnessError::Config(format!(
            "scenario_dir holds {} scenarios, scale needs {}",
            scenarios.len(),
            config.scale.n_scenarios
        )));
    }
    scenarios.truncate(config.scale.n_scenarios);
    Ok(scenarios)
}

fn task_stem(policy: &str, scenario_id: &str) -> String {
    format!("{policy}__{scenario_id}")
}

/// Run every (policy, scenario) trial and every ordered alt-policy replay,
/// persisting records, replay rows, and the cost matrix under the config's
/// output directory. Existing outputs are reused, so re-running an already
/// complete precompute computes nothing new.
pub fn precompute(
    config: &ExperimentConfig,
    diagonal: bool,
) -> Result<(CostMatrix, ReplayCache, PrecomputeSummary), HarnessError> {
    let roster = load_roster(config)?;
    let scenarios = load_scenarios(config)?;
    fs::create_dir_all(config.records_dir())?;
    fs::create_dir_all(config.replays_dir())?;

    let tasks: Vec<(usize, usize)> = (0..roster.len())
        .flat_map(|p| (0..scenarios.len()).map(move |s| (p, s)))
        .collect();

    struct TaskOut {
        entry: MatrixEntry,
        rows: Vec<ReplayRow>,
        computed_trial: bool,
        computed_replays: usize,
        cached_replays: usize,
        self_mismatch: bool,
    }

    let outputs: Vec<Result<TaskOut, HarnessError>> = tasks
        .par_iter()
        .map(|&(p, s)| -> Result<TaskOut, HarnessError> {
            let estimator = &roster[p];
            let scenario = &scenarios[s];
            let stem = task_stem(&estimator.name, &scenario.id);
            let record_path = config.records_dir().join(format!("{stem}.json"));
            let replays_path = config.replays_dir().join(format!("{stem}.jsonl"));
            let cfg = TrialConfig::for_scenario(config.sensing.clone(), scenario);

            let (result, record, computed_trial) = if record_path.exists() {
                let file: RecordFile = serde_json::from_str(&fs::read_to_string(&record_path)?)?;
                let (result, record) = file.into_parts().ok_or_else(|| {
                    HarnessError::Config(format!("corrupt record file {}", record_path.display()))
                })?;
                (result, record, false)
            } else {
                let (result, record) = navigate_trial(scenario, estimator, &cfg)?;
                fs::write(
                    &record_path,
                    serde_json::to_string(&RecordFile::new(&result, &record))?,
                )?;
                (result, record, true)
            };

            let mut rows = Vec::new();
            let mut computed_replays = 0;
            let mut cached_replays = 0;
            if replays_path.exists() {
                for line in fs::read_to_string(&replays_path)?.lines() {
                    if !line.trim().is_empty() {
                        rows.push(serde_json::from_str::<ReplayRow>(line)?);
                        cached_replays += 1;
                    }
                }
            } else if result.reached {
                let mut text = String::new();
                for alt in roster.iter().filter(|e| e.name != estimator.name) {
                    let outcome = replay_policy(&record, &scenario.id, alt, scenario.goal, &cfg)?;
                    let row = ReplayRow::new(&estimator.name, &outcome);
                    text.push_str(&serde_json::to_string(&row)?);
                    text.push('\n');
                    rows.push(row);
                    computed_replays += 1;
                }
                fs::write(&replays_path, text)?;
            }

            let mut self_mismatch = false;
            if diagonal && result.reached {
                let outcome = replay_policy(&record, &scenario.id, estimator, scenario.goal, &cfg)?;
                self_mismatch = outcome.trajectory != result.trajectory
                    || (outcome.c_lb_sc - result.cost).abs() > 1e-9 * result.cost.abs().max(1.0);
            }

            Ok(TaskOut {
                entry: MatrixEntry {
                    policy: estimator.name.clone(),
                    scenario_id: scenario.id.clone(),
                    cost: result.cost,
                    reached: result.reached,
                    record_file: format!("records/{stem}.json"),
                },
                rows,
                computed_trial,
                computed_replays,
                cached_replays,
                self_mismatch,
            })
        })
        .collect();

    let mut summary = PrecomputeSummary::default();
    let mut entries = Vec::with_capacity(tasks.len());
    let mut cache = ReplayCache::default();
    for out in outputs {
        let out = out?;
        summary.trials_computed += out.computed_trial as usize;
        summary.trials_cached += !out.computed_trial as usize;
        summary.replays_computed += out.computed_replays;
        summary.replays_cached += out.cached_replays;
        summary.self_replay_mismatches += out.self_mismatch as usize;
        entries.push(out.entry);
        for row in out.rows {
            cache.insert(row);
        }
    }
    // Deterministic order: roster-major, scenario-minor.
    entries.sort_by(|a, b| {
        let pa = roster.iter().position(|e| e.name == a.policy);
        let pb = roster.iter().position(|e| e.name == b.policy);
        pa.cmp(&pb).then_with(|| a.scenario_id.cmp(&b.scenario_id))
    });

    let matrix = CostMatrix {
        policies: roster.iter().map(|e| e.name.clone()).collect(),
        scenarios: scenarios.iter().map(|s| s.id.clone()).collect(),
        entries,
    };
    matrix.save(&config.matrix_path())?;
    Ok((matrix, cache, summary))
}

/// Generate `count` scenarios of one family into a directory, with a
/// manifest, deriving per-scenario seeds from the base seed.
pub fn generate_scenarios(
    family: crate::envgen::EnvFamily,
    params: &crate::envgen::EnvParams,
    count: usize,
    base_seed: u64,
    out_dir: &Path,
) -> Result<Vec<Scenario>, HarnessError> {
    use super::seeds::{split_seed, STREAM_ENVGEN};
    fs::create_dir_all(out_dir)?;
    let mut scenarios = Vec::with_capacity(count);
    let mut files = Vec::with_capacity(count);
    let mut seeds = Vec::with_capacity(count);
    for i in 0..count {
        // A seed occasionally yields a degenerate layout; salt and retry.
        let mut scenario = None;
        for salt in 0..16u64 {
            let seed = split_seed(base_seed, STREAM_ENVGEN, (i as u64) << 8 | salt);
            if let Ok(s) = crate::envgen::generate(family, params, seed) {
                scenario = Some(s);
                break;
            }
        }
        let scenario = scenario.ok_or_else(|| {
            HarnessError::Config(format!("could not generate scenario {i} of {family}"))
        })?;
        let path = scenario.save_to(out_dir)?;
        files.push(
            path.file_name()
                .expect("save_to returns a file path")
                .to_string_lossy()
                .into_owned(),
        );
        seeds.push(scenario.seed);
        scenarios.push(scenario);
    }
    let manifest = crate::envgen::EnvManifest {
        family: family.slug().to_string(),
        seeds,
        files,
    };
    fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string(&manifest)?,
    )?;
    Ok(scenarios)
}
