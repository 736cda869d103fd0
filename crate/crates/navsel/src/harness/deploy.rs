use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::replay::ReplayOutcome;
use crate::selection::{
    select_constrained, select_ucb, ucb_score, update_after_trial, PolicyStats, SelectorConfig,
    SelectorMode, TrialLogEntry,
};

use super::config::{bound_token, mode_token};
use super::precompute::{CostMatrix, ReplayCache};
use super::seeds::{split_seed, STREAM_DEPLOY};
use super::{ExperimentConfig, HarnessError};

/// Draw `k` distinct indices out of `n` in random order.
fn sample_scenarios(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    rand::seq::index::sample(rng, n, k).into_vec()
}

fn replay_outcomes_for(
    cache: &ReplayCache,
    deployed: &str,
    scenario_id: &str,
    roster: &[String],
) -> Result<BTreeMap<String, ReplayOutcome>, HarnessError> {
    let mut map = BTreeMap::new();
    for alt in roster.iter().filter(|p| *p != deployed) {
        let row = cache
            .outcomes(deployed, scenario_id)
            .and_then(|rows| rows.iter().find(|r| &r.replayed_policy == alt))
            .ok_or_else(|| HarnessError::IncompleteCache {
                policy: alt.clone(),
                scenario: scenario_id.to_string(),
            })?;
        map.insert(
            alt.clone(),
            ReplayOutcome {
                policy: row.replayed_policy.clone(),
                scenario_id: row.scenario_id.clone(),
                c_lb_opt: row.c_lb_opt,
                c_lb_sc: row.c_lb_sc,
                exit_attempts: row.exit_attempts,
                trajectory: Vec::new(),
            },
        );
    }
    Ok(map)
}

/// The per-policy scores the selector minimized; `None` encodes negative
/// infinity (still-unplayed arms under plain UCB).
fn selection_scores(
    all: &[PolicyStats],
    k: usize,
    selector: &SelectorConfig,
) -> BTreeMap<String, Option<f64>> {
    all.iter()
        .map(|stats| {
            let score = match selector.mode {
                SelectorMode::Ucb => ucb_score(stats, k, selector.c),
                SelectorMode::ConstrainedUcb => {
                    let bound =
                        crate::replay::combined_mean_bound(stats).unwrap_or(f64::NEG_INFINITY);
                    bound.max(ucb_score(stats, k, selector.c))
                }
            };
            (
                stats.policy.clone(),
                if score.is_finite() { Some(score) } else { None },
            )
        })
        .collect()
}

/// Run one deployment: sample a scenario subset, pick a random first
/// policy, then select per the configured rule, looking all costs and
/// replay bounds up in the precomputed tables.
pub fn run_one_deployment(
    config: &ExperimentConfig,
    selector: &SelectorConfig,
    matrix: &CostMatrix,
    cache: &ReplayCache,
    deployment_index: usize,
) -> Result<Vec<TrialLogEntry>, HarnessError> {
    let roster = matrix.policies.clone();
    let mut seed = split_seed(config.master_seed, STREAM_DEPLOY, deployment_index as u64);
    if !config.paired {
        // Unpaired runs decorrelate the scenario subsets across variants.
        let label = format!(
            "{}_{}",
            mode_token(selector.mode),
            bound_token(selector.bound.kind)
        );
        let tag = label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        });
        seed = split_seed(seed, STREAM_DEPLOY, tag);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample_scenarios(&mut rng, matrix.scenarios.len(), config.scale.n_trials);
    let first_policy = rng.random_range(0..roster.len());

    let mut stats: Vec<PolicyStats> = roster.iter().map(|p| PolicyStats::new(p)).collect();
    let mut log = Vec::with_capacity(picks.len());

    for (trial_index, &scenario_pick) in picks.iter().enumerate() {
        let k = trial_index + 1;
        let scenario_id = matrix.scenarios[scenario_pick].clone();
        let (selected, bounds_used) = if k == 1 {
            (first_policy, BTreeMap::new())
        } else {
            // Scores reflect statistics through trial k-1.
            let scores = selection_scores(&stats, k - 1, selector);
            let pick = match selector.mode {
                SelectorMode::Ucb => select_ucb(&stats, k - 1, selector),
                SelectorMode::ConstrainedUcb => select_constrained(&stats, k - 1, selector)?,
            };
            (pick, scores)
        };
        let policy = roster[selected].clone();
        let entry =
            matrix
                .get(&policy, &scenario_id)
                .ok_or_else(|| HarnessError::IncompleteCache {
                    policy: policy.clone(),
                    scenario: scenario_id.clone(),
                })?;
        let replays = replay_outcomes_for(cache, &policy, &scenario_id, &roster)?;
        update_after_trial(&mut stats, &policy, entry.cost, &replays, &selector.bound)?;
        log.push(TrialLogEntry {
            deployment_seed: seed,
            k,
            selected_policy: policy,
            scenario_id,
            cost: entry.cost,
            bounds_used,
        });
    }
    Ok(log)
}

/// Run all deployments for one selector configuration and write one
/// JSON-lines log per deployment under `logs/<mode>_<bound>/`.
pub fn run_deployments(
    config: &ExperimentConfig,
    selector: &SelectorConfig,
    matrix: &CostMatrix,
    cache: &ReplayCache,
) -> Result<Vec<PathBuf>, HarnessError> {
    let label = format!(
        "{}_{}",
        mode_token(selector.mode),
        bound_token(selector.bound.kind)
    );
    let dir = config.logs_dir().join(label);
    fs::create_dir_all(&dir)?;

    let results: Vec<Result<PathBuf, HarnessError>> = (0..config.scale.n_deployments)
        .into_par_iter()
        .map(|d| {
            let log = run_one_deployment(config, selector, matrix, cache, d)?;
            let mut text = String::new();
            for entry in &log {
                text.push_str(&serde_json::to_string(entry)?);
                text.push('\n');
            }
            let path = dir.join(format!("deploy_{d:04}.jsonl"));
            fs::write(&path, text)?;
            Ok(path)
        })
        .collect();
    let mut paths = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    paths.sort();
    Ok(paths)
}
