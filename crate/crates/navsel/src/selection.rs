//! Policy selection across trials: the UCB baseline and the
//! replay-constrained variant, plus per-policy bookkeeping and cumulative
//! regret accounting.
//!
//! Scores are *costs*, so selection minimizes and the confidence term is
//! subtracted (a lower confidence bound); an unplayed arm scores negative
//! infinity under plain UCB, forcing initial exploration. The constrained
//! selector takes, per policy, the tighter (higher) of the UCB score and the
//! pooled replay bound, so a policy whose replays already rule it out never
//! gets a free exploration pull.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::replay::{combined_mean_bound, BoundConfig, ReplayError, ReplayOutcome};

#[derive(Debug, Error)]
pub enum SelectionError {
    /// A policy has neither deployments nor replays to score it with.
    #[error("policy '{0}' has no data")]
    NoData(String),
    /// `update_after_trial` got no replay outcome for some alternative.
    #[error("missing replay outcome for policy '{0}'")]
    MissingReplay(String),
    /// A replay outcome was supplied for the deployed policy itself or an
    /// unknown policy.
    #[error("unexpected replay outcome for policy '{0}'")]
    UnexpectedReplay(String),
    /// The cost matrix lacks an entry the regret accounting needs.
    #[error("cost matrix missing entry for policy '{policy}' on '{scenario}'")]
    IncompleteMatrix { policy: String, scenario: String },
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// Running selection statistics for one policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyStats {
    pub policy: String,
    /// Times this policy was deployed.
    pub n_deployed: usize,
    /// Mean observed trial cost; defined iff deployed at least once.
    pub mean_cost: Option<f64>,
    /// Times this policy was replayed offline.
    pub n_replayed: usize,
    /// Mean replayed lower bound of the configured kind.
    pub mean_replay_lb: Option<f64>,
}

impl PolicyStats {
    pub fn new(policy: &str) -> Self {
        PolicyStats {
            policy: policy.to_string(),
            n_deployed: 0,
            mean_cost: None,
            n_replayed: 0,
            mean_replay_lb: None,
        }
    }
}

/// Selection mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectorMode {
    Ucb,
    ConstrainedUcb,
}

/// Selector configuration. The exploration weight defaults to 100.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectorConfig {
    pub c: f64,
    pub mode: SelectorMode,
    pub bound: BoundConfig,
}

impl SelectorConfig {
    pub fn new(mode: SelectorMode, bound: BoundConfig) -> Self {
        SelectorConfig {
            c: 100.0,
            mode,
            bound,
        }
    }
}

/// Lower-confidence score after `k` trials: `mean - c * sqrt(ln k / n)`.
/// Unplayed arms score negative infinity so plain UCB must try them.
pub fn ucb_score(stats: &PolicyStats, k: usize, c: f64) -> f64 {
    debug_assert!(k >= 1);
    if stats.n_deployed == 0 {
        return f64::NEG_INFINITY;
    }
    let mean = stats.mean_cost.expect("deployed policies have a mean");
    mean - c * ((k as f64).ln() / stats.n_deployed as f64).sqrt()
}

/// Plain UCB selection: minimize the score; ties (and joint negative
/// infinity) resolve to roster order.
pub fn select_ucb(all: &[PolicyStats], k: usize, config: &SelectorConfig) -> usize {
    assert!(!all.is_empty(), "selection needs at least one policy");
    let mut best = 0;
    let mut best_score = ucb_score(&all[0], k, config.c);
    for (i, stats) in all.iter().enumerate().skip(1) {
        let score = ucb_score(stats, k, config.c);
        if score < best_score {
            best = i;
            best_score = score;
        }
    }
    best
}

/// Constrained selection: per policy, take the tighter (higher) of the
/// pooled replay bound and the UCB score, then minimize.
pub fn select_constrained(
    all: &[PolicyStats],
    k: usize,
    config: &SelectorConfig,
) -> Result<usize, SelectionError> {
    assert!(!all.is_empty(), "selection needs at least one policy");
    let mut best: Option<(usize, f64)> = None;
    for (i, stats) in all.iter().enumerate() {
        if stats.n_deployed + stats.n_replayed == 0 {
            return Err(SelectionError::NoData(stats.policy.clone()));
        }
        let bound = combined_mean_bound(stats)?;
        let score = bound.max(ucb_score(stats, k, config.c));
        if best.is_none() || score < best.expect("checked").1 {
            best = Some((i, score));
        }
    }
    Ok(best.expect("non-empty").0)
}

/// Fold one finished trial into the statistics: the deployed policy's
/// observed cost, and one replayed bound for every alternative.
pub fn update_after_trial(
    all: &mut [PolicyStats],
    deployed: &str,
    trial_cost: f64,
    replays: &BTreeMap<String, ReplayOutcome>,
    bound: &BoundConfig,
) -> Result<(), SelectionError> {
    for name in replays.keys() {
        if name == deployed || !all.iter().any(|s| s.policy == *name) {
            return Err(SelectionError::UnexpectedReplay(name.clone()));
        }
    }
    for stats in all.iter_mut() {
        if stats.policy == deployed {
            stats.n_deployed += 1;
            let n = stats.n_deployed as f64;
            let prev = stats.mean_cost.unwrap_or(0.0);
            stats.mean_cost = Some(prev + (trial_cost - prev) / n);
        } else {
            let outcome = replays
                .get(&stats.policy)
                .ok_or_else(|| SelectionError::MissingReplay(stats.policy.clone()))?;
            let value = outcome.bound(bound)?;
            stats.n_replayed += 1;
            let n = stats.n_replayed as f64;
            let prev = stats.mean_replay_lb.unwrap_or(0.0);
            stats.mean_replay_lb = Some(prev + (value - prev) / n);
        }
    }
    Ok(())
}

/// One trial of a deployment log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialLogEntry {
    pub deployment_seed: u64,
    /// Trial index within the deployment, 1-based.
    pub k: usize,
    pub selected_policy: String,
    pub scenario_id: String,
    pub cost: f64,
    /// Per-policy selection score in effect when this trial was chosen
    /// (`None` encodes negative infinity for unplayed arms).
    pub bounds_used: BTreeMap<String, Option<f64>>,
}

/// Precomputed (policy, scenario) -> cost lookup used by regret accounting.
pub trait CostLookup {
    fn cost(&self, policy: &str, scenario_id: &str) -> Option<f64>;
}

/// Per-trial cumulative regret of a deployment log.
///
/// The baseline is the best single policy in hindsight: the roster policy
/// with the lowest mean cost across this deployment's own scenario
/// sequence. Regret at trial `k` sums the per-trial gap between the
/// selected policy's cost and the baseline policy's cost on the same
/// scenarios.
pub fn cumulative_regret(
    log: &[TrialLogEntry],
    roster: &[String],
    costs: &dyn CostLookup,
) -> Result<Vec<f64>, SelectionError> {
    if log.is_empty() {
        return Ok(Vec::new());
    }
    let lookup = |policy: &str, scenario: &str| -> Result<f64, SelectionError> {
        costs
            .cost(policy, scenario)
            .ok_or_else(|| SelectionError::IncompleteMatrix {
                policy: policy.to_string(),
                scenario: scenario.to_string(),
            })
    };
    let mut best_policy = "";
    let mut best_mean = f64::INFINITY;
    for policy in roster {
        let mut sum = 0.0;
        for entry in log {
            sum += lookup(policy, &entry.scenario_id)?;
        }
        let mean = sum / log.len() as f64;
        if mean < best_mean {
            best_mean = mean;
            best_policy = policy;
        }
    }

    let mut series = Vec::with_capacity(log.len());
    let mut total = 0.0;
    for entry in log {
        let incurred = lookup(&entry.selected_policy, &entry.scenario_id)?;
        let baseline = lookup(best_policy, &entry.scenario_id)?;
        total += incurred - baseline;
        series.push(total);
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replay::BoundKind;
    use approx::assert_relative_eq;

    fn stats(
        name: &str,
        n: usize,
        mean: Option<f64>,
        n_rep: usize,
        lb: Option<f64>,
    ) -> PolicyStats {
        PolicyStats {
            policy: name.into(),
            n_deployed: n,
            mean_cost: mean,
            n_replayed: n_rep,
            mean_replay_lb: lb,
        }
    }

    fn sc_config(mode: SelectorMode) -> SelectorConfig {
        SelectorConfig::new(mode, BoundConfig::new(BoundKind::SimplyConnected, 0.5))
    }

    #[test]
    fn ucb_score_cases() {
        assert_eq!(
            ucb_score(&stats("p", 0, None, 0, None), 5, 100.0),
            f64::NEG_INFINITY
        );
        let s = stats("p", 5, Some(150.0), 0, None);
        let score = ucb_score(&s, 10, 100.0);
        assert_relative_eq!(score, 150.0 - 100.0 * (10f64.ln() / 5.0).sqrt());
        assert!((score - 82.139).abs() < 1e-3);
        assert_relative_eq!(ucb_score(&s, 10, 0.0), 150.0);
    }

    #[test]
    fn ucb_explores_unplayed_first() {
        let all = vec![
            stats("a", 3, Some(100.0), 0, None),
            stats("b", 0, None, 0, None),
        ];
        assert_eq!(select_ucb(&all, 4, &sc_config(SelectorMode::Ucb)), 1);
    }

    #[test]
    fn ucb_prefers_lower_score() {
        let all = vec![
            stats("a", 5, Some(150.0), 0, None),
            stats("b", 5, Some(200.0), 0, None),
        ];
        assert_eq!(select_ucb(&all, 10, &sc_config(SelectorMode::Ucb)), 0);
    }

    #[test]
    fn ucb_ties_resolve_to_roster_order() {
        let all = vec![
            stats("a", 5, Some(150.0), 0, None),
            stats("b", 5, Some(150.0), 0, None),
        ];
        assert_eq!(select_ucb(&all, 10, &sc_config(SelectorMode::Ucb)), 0);
    }

    #[test]
    fn constrained_uses_replay_evidence_to_avoid_exploring() {
        // pi1 deployed 5 times at mean 150 (no replays): bound 150, ucb
        // 82.14, max 150. pi2 never deployed but replayed at 170: its bound
        // alone rules it out.
        let all = vec![
            stats("pi1", 5, Some(150.0), 0, None),
            stats("pi2", 0, None, 5, Some(170.0)),
        ];
        let cfg = sc_config(SelectorMode::ConstrainedUcb);
        assert_eq!(select_constrained(&all, 10, &cfg).unwrap(), 0);

        // With a promising replay bound instead, pi2 is worth trying.
        let all = vec![
            stats("pi1", 5, Some(150.0), 0, None),
            stats("pi2", 0, None, 5, Some(140.0)),
        ];
        assert_eq!(select_constrained(&all, 10, &cfg).unwrap(), 1);
    }

    #[test]
    fn constrained_single_policy() {
        let all = vec![stats("only", 1, Some(10.0), 0, None)];
        let cfg = sc_config(SelectorMode::ConstrainedUcb);
        assert_eq!(select_constrained(&all, 2, &cfg).unwrap(), 0);
    }

    #[test]
    fn constrained_rejects_dataless_policy() {
        let all = vec![stats("empty", 0, None, 0, None)];
        let cfg = sc_config(SelectorMode::ConstrainedUcb);
        assert!(matches!(
            select_constrained(&all, 2, &cfg),
            Err(SelectionError::NoData(_))
        ));
    }

    fn outcome(policy: &str, opt: f64, sc: f64) -> ReplayOutcome {
        ReplayOutcome {
            policy: policy.into(),
            scenario_id: "s".into(),
            c_lb_opt: opt,
            c_lb_sc: sc,
            exit_attempts: 0,
            trajectory: Vec::new(),
        }
    }

    #[test]
    fn update_first_trial() {
        let mut all = vec![
            PolicyStats::new("a"),
            PolicyStats::new("b"),
            PolicyStats::new("c"),
        ];
        let replays = BTreeMap::from([
            ("b".to_string(), outcome("b", 90.0, 90.0)),
            ("c".to_string(), outcome("c", 130.0, 130.0)),
        ]);
        let bound = BoundConfig::new(BoundKind::SimplyConnected, 0.5);
        update_after_trial(&mut all, "a", 100.0, &replays, &bound).unwrap();
        assert_eq!(all[0].n_deployed, 1);
        assert_relative_eq!(all[0].mean_cost.unwrap(), 100.0);
        assert_relative_eq!(all[1].mean_replay_lb.unwrap(), 90.0);
        assert_relative_eq!(all[2].mean_replay_lb.unwrap(), 130.0);
    }

    #[test]
    fn update_running_average() {
        let mut all = vec![PolicyStats::new("a"), PolicyStats::new("b")];
        let bound = BoundConfig::new(BoundKind::SimplyConnected, 0.5);
        let r1 = BTreeMap::from([("b".to_string(), outcome("b", 90.0, 90.0))]);
        update_after_trial(&mut all, "a", 100.0, &r1, &bound).unwrap();
        let r2 = BTreeMap::from([("b".to_string(), outcome("b", 150.0, 150.0))]);
        update_after_trial(&mut all, "a", 120.0, &r2, &bound).unwrap();
        assert_relative_eq!(all[0].mean_cost.unwrap(), 110.0);
        assert_relative_eq!(all[1].mean_replay_lb.unwrap(), 120.0);
    }

    #[test]
    fn update_roster_of_one() {
        let mut all = vec![PolicyStats::new("solo")];
        let bound = BoundConfig::new(BoundKind::SimplyConnected, 0.5);
        update_after_trial(&mut all, "solo", 42.0, &BTreeMap::new(), &bound).unwrap();
        assert_eq!(all[0].n_deployed, 1);
        assert_eq!(all[0].n_replayed, 0);
    }

    #[test]
    fn update_missing_replay_errors() {
        let mut all = vec![PolicyStats::new("a"), PolicyStats::new("b")];
        let bound = BoundConfig::new(BoundKind::SimplyConnected, 0.5);
        let r = update_after_trial(&mut all, "a", 1.0, &BTreeMap::new(), &bound);
        assert!(matches!(r, Err(SelectionError::MissingReplay(_))));
    }

    struct MapLookup(BTreeMap<(String, String), f64>);

    impl CostLookup for MapLookup {
        fn cost(&self, policy: &str, scenario_id: &str) -> Option<f64> {
            self.0
                .get(&(policy.to_string(), scenario_id.to_string()))
                .copied()
        }
    }

    fn two_policy_costs() -> MapLookup {
        // best on both scenarios: "good".
        let mut m = BTreeMap::new();
        for (s, good, bad) in [("s1", 100.0, 110.0), ("s2", 100.0, 150.0)] {
            m.insert(("good".to_string(), s.to_string()), good);
            m.insert(("bad".to_string(), s.to_string()), bad);
        }
        MapLookup(m)
    }

    fn entry(k: usize, policy: &str, scenario: &str) -> TrialLogEntry {
        TrialLogEntry {
            deployment_seed: 7,
            k,
            selected_policy: policy.into(),
            scenario_id: scenario.into(),
            cost: 0.0,
            bounds_used: BTreeMap::new(),
        }
    }

    #[test]
    fn regret_zero_when_always_best() {
        let roster = vec!["good".to_string(), "bad".to_string()];
        let log = vec![entry(1, "good", "s1"), entry(2, "good", "s2")];
        let series = cumulative_regret(&log, &roster, &two_policy_costs()).unwrap();
        assert_eq!(series, vec![0.0, 0.0]);
    }

    #[test]
    fn regret_accumulates_constant_gap() {
        let roster = vec!["good".to_string(), "bad".to_string()];
        let log = vec![
            entry(1, "bad", "s1"),
            entry(2, "bad", "s1"),
            entry(3, "bad", "s1"),
        ];
        let series = cumulative_regret(&log, &roster, &two_policy_costs()).unwrap();
        assert_eq!(series, vec![10.0, 20.0, 30.0]);
    }

    #[test]
    fn regret_single_bad_pick() {
        let roster = vec!["good".to_string(), "bad".to_string()];
        let log = vec![
            entry(1, "good", "s1"),
            entry(2, "bad", "s2"),
            entry(3, "good", "s1"),
        ];
        let series = cumulative_regret(&log, &roster, &two_policy_costs()).unwrap();
        assert_eq!(series, vec![0.0, 50.0, 50.0]);
    }

    #[test]
    fn regret_incomplete_matrix_errors() {
        let roster = vec!["good".to_string(), "missing".to_string()];
        let log = vec![entry(1, "good", "s1")];
        let r = cumulative_regret(&log, &roster, &two_policy_costs());
        assert!(matches!(r, Err(SelectionError::IncompleteMatrix { .. })));
    }
}
