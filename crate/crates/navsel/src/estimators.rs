//! Subgoal-property estimators.
//!
//! Every frontier carries three estimated properties: the probability it
//! leads to the goal, the expected cost of reaching the goal through it, and
//! the expected cost wasted if it does not pan out. Estimators are
//! deliberately pose-agnostic — they see only the belief map, the frontier,
//! and the goal — which is what makes offline replay of a policy faithful:
//! the replayed robot may stand somewhere else entirely and still obtain the
//! same estimates.
//!
//! Three estimator kinds are shipped:
//! - `NonLearned`: optimistic heuristics, every frontier assumed to work.
//! - `FeatureKeyed`: a fixed lookup from the frontier's feature signature.
//! - `Tabular`: count-based statistics learned from labeled trials.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envgen::Scenario;
use crate::gridmap::{
    cost_grid, shortest_path_cost, Cell, CellState, Frontier, GridMap, UnknownRule,
};
use crate::planner::{navigate_trial, SensingParams, TrialConfig};

#[derive(Debug, Error)]
pub enum EstimatorError {
    /// The goal cannot be reached from this frontier even through unknown
    /// space; the caller drops the action.
    #[error("goal unreachable from frontier at ({x}, {y})", x = .0.x, y = .0.y)]
    UnreachableGoal(Cell),
    #[error("tabular training needs at least one scenario")]
    NoScenarios,
    #[error("malformed estimator file: {0}")]
    MalformedFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The property triple attached to a frontier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgoalProperties {
    /// Probability the frontier leads to the goal, in [0, 1].
    pub p_s: f64,
    /// Expected cost to reach the goal beyond the frontier, cell-lengths.
    pub r_s: f64,
    /// Expected cost of failed exploration beyond the frontier.
    pub r_e: f64,
}

/// Anything that can score a frontier. Implementations must be
/// deterministic, and the signature admits no robot pose on purpose.
pub trait SubgoalEstimator {
    fn name(&self) -> &str;
    fn estimate(
        &self,
        belief: &GridMap,
        frontier: &Frontier,
        goal: Cell,
    ) -> Result<SubgoalProperties, EstimatorError>;
}

/// One entry of a feature-keyed table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub p_s: f64,
    /// Multiplies the optimistic frontier-to-goal distance to form `r_s`.
    pub r_s_multiplier: f64,
    pub r_e: f64,
}

/// Per-signature counts for the tabular estimator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SignatureStats {
    pub n: u64,
    pub successes: u64,
    pub sum_success_cost: f64,
    pub sum_failure_cost: f64,
}

/// Fallback failure cost when a signature has no failure observations, on
/// the order of a typical dead-end corridor.
pub const DEFAULT_R_E: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorKind {
    NonLearned,
    FeatureKeyed {
        table: BTreeMap<u8, FeatureEntry>,
        default: FeatureEntry,
    },
    Tabular {
        counts: BTreeMap<u8, SignatureStats>,
        r_e_default: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    pub name: String,
    pub kind: EstimatorKind,
}

impl Estimator {
    /// The optimistic baseline: every frontier is assumed to lead to the
    /// goal at the shortest conceivable distance.
    pub fn non_learned() -> Self {
        Estimator {
            name: "nonlearned".into(),
            kind: EstimatorKind::NonLearned,
        }
    }

    /// Follows the marker channel: marked frontiers are believed in, plain
    /// ones distrusted. Near-optimal wherever the marker is honest.
    pub fn trusting() -> Self {
        Estimator {
            name: "trusting".into(),
            kind: EstimatorKind::FeatureKeyed {
                table: BTreeMap::from([
                    (
                        1,
                        FeatureEntry {
                            p_s: 0.95,
                            r_s_multiplier: 1.0,
                            r_e: 10.0,
                        },
                    ),
                    (
                        0,
                        FeatureEntry {
                            p_s: 0.05,
                            r_s_multiplier: 1.0,
                            r_e: 10.0,
                        },
                    ),
                ]),
                default: FeatureEntry {
                    p_s: 0.5,
                    r_s_multiplier: 1.0,
                    r_e: DEFAULT_R_E,
                },
            },
        }
    }

    /// The mirror image of [`Estimator::trusting`]: shuns marked frontiers.
    pub fn avoiding() -> Self {
        let mut est = Estimator::trusting();
        est.name = "avoiding".into();
        if let EstimatorKind::FeatureKeyed { table, .. } = &mut est.kind {
            let one = table[&1];
            let zero = table[&0];
            table.insert(1, zero);
            table.insert(0, one);
        }
        est
    }

    pub fn feature_keyed(
        name: &str,
        table: BTreeMap<u8, FeatureEntry>,
        default: FeatureEntry,
    ) -> Self {
        Estimator {
            name: name.into(),
            kind: EstimatorKind::FeatureKeyed { table, default },
        }
    }
}

/// The feature signature of a frontier: the dominant feature label among
/// free belief cells 8-adjacent to its member cells (members themselves
/// count when they neighbor another member). Ties go to the larger label.
pub fn frontier_signature(belief: &GridMap, frontier: &Frontier) -> u8 {
    let mut neighborhood: BTreeSet<Cell> = BTreeSet::new();
    for &c in frontier.cells() {
        for n in belief.neighbors8(c) {
            if belief.is_free(n) {
                neighborhood.insert(n);
            }
        }
    }
    if neighborhood.is_empty() {
        // An isolated frontier: fall back to its own labels.
        neighborhood.extend(frontier.cells().iter().copied());
    }
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for c in neighborhood {
        *counts.entry(belief.feature(c)).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(label, _)| label)
        .unwrap_or(0)
}

impl SubgoalEstimator for Estimator {
    fn name(&self) -> &str {
        &self.name
    }

    fn estimate(
        &self,
        belief: &GridMap,
        frontier: &Frontier,
        goal: Cell,
    ) -> Result<SubgoalProperties, EstimatorError> {
        let optimistic =
            shortest_path_cost(belief, frontier.centroid(), goal, UnknownRule::Traversable)
                .map_err(|_| EstimatorError::UnreachableGoal(frontier.centroid()))?;
        if !optimistic.is_finite() {
            // Enclosed frontier: no route to the goal even through unknown
            // space.
            return Err(EstimatorError::UnreachableGoal(frontier.centroid()));
        }
        let props = match &self.kind {
            EstimatorKind::NonLearned => SubgoalProperties {
                p_s: 1.0,
                r_s: optimistic,
                r_e: 0.0,
            },
            EstimatorKind::FeatureKeyed { table, default } => {
                let sig = frontier_signature(belief, frontier);
                let entry = table.get(&sig).unwrap_or(default);
                SubgoalProperties {
                    p_s: entry.p_s,
                    r_s: entry.r_s_multiplier * optimistic,
                    r_e: entry.r_e,
                }
            }
            EstimatorKind::Tabular {
                counts,
                r_e_default,
            } => {
                let sig = frontier_signature(belief, frontier);
                let stats = counts.get(&sig).copied().unwrap_or_default();
                let p_s = (stats.successes + 1) as f64 / (stats.n + 2) as f64;
                let r_s = if stats.successes > 0 {
                    stats.sum_success_cost / stats.successes as f64
                } else {
                    optimistic
                };
                let failures = stats.n - stats.successes;
                let r_e = if failures > 0 {
                    stats.sum_failure_cost / failures as f64
                } else {
                    *r_e_default
                };
                SubgoalProperties { p_s, r_s, r_e }
            }
        };
        debug_assert!((0.0..=1.0).contains(&props.p_s));
        debug_assert!(props.r_s.is_finite() && props.r_s >= 0.0);
        debug_assert!(props.r_e.is_finite() && props.r_e >= 0.0);
        Ok(props)
    }
}

/// Ground-truth outcome of exploring past one frontier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelOutcome {
    /// The goal is reachable through unknown space behind the frontier, at
    /// this cost from the frontier's centroid.
    Success { cost: f64 },
    /// Dead end; the cost is the depth of the unknown pocket behind the
    /// frontier.
    Failure { cost: f64 },
}

/// One labeled frontier occurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSample {
    pub signature: u8,
    pub outcome: LabelOutcome,
}

/// Label one frontier against the fully known map.
///
/// The frontier leads to the goal iff the goal is reachable in the true map
/// from the frontier centroid without re-entering space the belief already
/// knows to be free (other than the frontier itself): exploring past this
/// frontier, does fresh terrain get you there? On failure the cost is the
/// distance to the farthest reachable cell of the unknown pocket, a dead-end
/// depth heuristic.
pub fn label_subgoal(
    true_map: &GridMap,
    belief: &GridMap,
    frontier: &Frontier,
    goal: Cell,
) -> TrainingSample {
    let mut masked = true_map.clone();
    for c in belief.iter_cells() {
        if belief.get(c) == CellState::Free && !frontier.contains(c) {
            masked.set(c, CellState::Occupied);
        }
    }
    let grid = cost_grid(&masked, &[frontier.centroid()], UnknownRule::Blocked)
        .expect("frontier centroid is free in a sound belief");
    let signature = frontier_signature(belief, frontier);
    let goal_cost = grid.cost(goal);
    let outcome = if goal_cost.is_finite() {
        LabelOutcome::Success { cost: goal_cost }
    } else {
        LabelOutcome::Failure {
            cost: grid.max_finite().unwrap_or(0.0),
        }
    };
    TrainingSample { signature, outcome }
}

/// Result of tabular training.
pub struct TrainingOutput {
    pub estimator: Estimator,
    /// Scenarios the data-collection policy failed to finish (skipped).
    pub skipped_scenarios: usize,
}

/// Train a tabular estimator by running the non-learned policy over the
/// given scenarios and labeling every frontier observed at every step
/// against the true map.
pub fn train_tabular(
    scenarios: &[Scenario],
    sensing: &SensingParams,
    name: &str,
    r_e_default: f64,
) -> Result<TrainingOutput, EstimatorError> {
    if scenarios.is_empty() {
        return Err(EstimatorError::NoScenarios);
    }
    let collector = Estimator::non_learned();
    let mut counts: BTreeMap<u8, SignatureStats> = BTreeMap::new();
    let mut skipped = 0;

    for scenario in scenarios {
        let cfg = TrialConfig::for_scenario(sensing.clone(), scenario);
        let (result, record) = match navigate_trial(scenario, &collector, &cfg) {
            Ok(pair) => pair,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        if !result.reached {
            skipped += 1;
            continue;
        }
        // Rebuild the belief sequence from the record and label the
        // frontiers seen at each step.
        let mut belief = GridMap::unknown(scenario.true_map.width(), scenario.true_map.height());
        for step in &record.steps {
            belief = crate::gridmap::update_belief(&belief, &scenario.true_map, &step.footprint)
                .expect("record footprints match the scenario map");
            for frontier in crate::gridmap::extract_frontiers(&belief, cfg.frontier_min_size) {
                let sample = label_subgoal(&scenario.true_map, &belief, &frontier, scenario.goal);
                let entry = counts.entry(sample.signature).or_default();
                entry.n += 1;
                match sample.outcome {
                    LabelOutcome::Success { cost } => {
                        entry.successes += 1;
                        entry.sum_success_cost += cost;
                    }
                    LabelOutcome::Failure { cost } => {
                        entry.sum_failure_cost += cost;
                    }
                }
            }
        }
    }

    Ok(TrainingOutput {
        estimator: Estimator {
            name: name.into(),
            kind: EstimatorKind::Tabular {
                counts,
                r_e_default,
            },
        },
        skipped_scenarios: skipped,
    })
}

// ── Serialization ────────────────────────────────────────────────────────
//
// {"kind": ..., "name": ..., "parameters": ...} with tabular parameters
// stored as {signature: {n, successes, sum_success_cost, sum_failure_cost}}.

#[derive(Serialize, Deserialize)]
struct EstimatorJson {
    kind: String,
    name: String,
    parameters: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct FeatureKeyedJson {
    table: BTreeMap<u8, FeatureEntry>,
    default: FeatureEntry,
}

impl Estimator {
    pub fn to_json_string(&self) -> String {
        let (kind, parameters) = match &self.kind {
            EstimatorKind::NonLearned => ("non_learned", serde_json::Value::Null),
            EstimatorKind::FeatureKeyed { table, default } => (
                "feature_keyed",
                serde_json::to_value(FeatureKeyedJson {
                    table: table.clone(),
                    default: *default,
                })
                .expect("serialization cannot fail"),
            ),
            EstimatorKind::Tabular { counts, .. } => (
                "tabular",
                serde_json::to_value(counts).expect("serialization cannot fail"),
            ),
        };
        serde_json::to_string(&EstimatorJson {
            kind: kind.into(),
            name: self.name.clone(),
            parameters,
        })
        .expect("serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> Result<Self, EstimatorError> {
        let json: EstimatorJson = serde_json::from_str(s)?;
        let kind = match json.kind.as_str() {
            "non_learned" => EstimatorKind::NonLearned,
            "feature_keyed" => {
                let fk: FeatureKeyedJson = serde_json::from_value(json.parameters)?;
                EstimatorKind::FeatureKeyed {
                    table: fk.table,
                    default: fk.default,
                }
            }
            "tabular" => EstimatorKind::Tabular {
                counts: serde_json::from_value(json.parameters)?,
                r_e_default: DEFAULT_R_E,
            },
            other => {
                return Err(EstimatorError::MalformedFile(format!(
                    "unknown estimator kind '{other}'"
                )))
            }
        };
        Ok(Estimator {
            name: json.name,
            kind,
        })
    }

    pub fn save_to(&self, path: &Path) -> Result<(), EstimatorError> {
        fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, EstimatorError> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }
}
