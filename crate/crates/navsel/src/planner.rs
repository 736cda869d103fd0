//! The subgoal planning loop.
//!
//! Each step the robot scans, folds the footprint into its belief map,
//! extracts frontiers, scores them with the factored Bellman recursion over
//! estimated subgoal properties, and moves one grid step toward the best
//! one. Once the goal itself is inside known free space the frontier
//! machinery is bypassed and the robot walks the shortest known path.
//!
//! The same loop drives live trials and offline replay; replay passes a
//! context that gates the estimator to frontiers the recorded robot actually
//! saw and intercepts attempts to leave recorded knowledge (see
//! [`crate::replay`]).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envgen::Scenario;
use crate::estimators::{Estimator, EstimatorError, SubgoalEstimator, SubgoalProperties};
use crate::gridmap::{
    cost_grid, extract_frontiers, shortest_path_cost, simulate_scan, update_belief, Cell,
    CellState, CostGrid, Frontier, GridError, GridMap, Pose, UnknownRule,
};

#[derive(Debug, Error)]
pub enum PlannerError {
    /// Every frontier was dropped (unreachable goal or disconnected).
    #[error("no viable frontier actions")]
    NoActions,
    /// The motion target cannot be reached through known free space.
    #[error("target unreachable in known space")]
    Unreachable,
    /// Sensing parameters too degenerate for the planning loop.
    #[error("invalid sensing parameters: {0}")]
    InvalidSensing(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Range sensor configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensingParams {
    /// Maximum sensing distance in cell-lengths.
    pub range: f64,
    pub n_rays: usize,
}

impl Default for SensingParams {
    fn default() -> Self {
        SensingParams {
            range: 20.0,
            n_rays: 360,
        }
    }
}

/// Per-trial configuration.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub sensing: SensingParams,
    pub step_cap: usize,
    pub frontier_min_size: usize,
}

impl TrialConfig {
    /// Default cap, generous enough that any completable exploration
    /// finishes: ten times the map semi-perimeter.
    pub fn default_cap(width: usize, height: usize) -> usize {
        10 * (width + height)
    }

    pub fn for_scenario(sensing: SensingParams, scenario: &Scenario) -> Self {
        let cap = Self::default_cap(scenario.true_map.width(), scenario.true_map.height());
        TrialConfig {
            sensing,
            step_cap: cap,
            frontier_min_size: 1,
        }
    }
}

/// The planner's state: belief map, pose, goal, and travel bookkeeping.
#[derive(Debug, Clone)]
pub struct Belief {
    pub map: GridMap,
    pub pose: Pose,
    pub goal: Cell,
    pub step_count: usize,
    pub distance_traveled: f64,
}

impl Belief {
    pub fn new(map: GridMap, pose: Pose, goal: Cell) -> Self {
        Belief {
            map,
            pose,
            goal,
            step_count: 0,
            distance_traveled: 0.0,
        }
    }

    fn advance(&mut self, pose: Pose, step_cost: f64) {
        self.pose = pose;
        self.step_count += 1;
        self.distance_traveled += step_cost;
    }
}

/// One scored frontier action.
#[derive(Debug, Clone)]
pub struct ActionEvaluation {
    pub frontier: Frontier,
    /// Known-space travel cost from the robot to the frontier.
    pub d: f64,
    pub props: SubgoalProperties,
    /// Expected total cost of committing to this frontier first.
    pub q: f64,
}

/// Outcome of one trial.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub cost: f64,
    pub trajectory: Vec<Pose>,
    pub reached: bool,
    pub scenario_id: String,
    pub policy: String,
}

/// One recorded step: where the robot stood and what it saw from there.
#[derive(Debug, Clone)]
pub struct RecordStep {
    pub pose: Pose,
    pub footprint: BTreeSet<Cell>,
}

/// Everything needed to replay other policies offline: the per-step poses
/// and visibility footprints, plus the final belief map.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub steps: Vec<RecordStep>,
    pub m_final: GridMap,
}

// ── Factored Bellman recursion ───────────────────────────────────────────

/// Cost charged when every action in the remainder set has failed: large
/// enough to dominate any real path, finite so the arithmetic stays total.
pub const INFEASIBLE_COST: f64 = 1e8;

/// Largest action set evaluated exactly; beyond this the caller prunes.
pub const MAX_EXACT_ACTIONS: usize = 10;

/// Exact expected cost per action over all orderings of the action set.
///
/// `q[i]` is the cost of committing to action `i` first and then proceeding
/// optimally: `Q(S, a) = d(a) + p(a) r_s(a) + (1 - p(a)) (r_e(a) +
/// min_{a' in S\a} Q(S\a, a'))`, with the empty-remainder minimum pinned to
/// [`INFEASIBLE_COST`]. Subset-memoized, so exact up to
/// [`MAX_EXACT_ACTIONS`] actions.
pub fn q_values(actions: &[(f64, SubgoalProperties)]) -> Vec<f64> {
    let n = actions.len();
    assert!(n <= 20, "action set too large for exact evaluation");
    if n == 0 {
        return Vec::new();
    }
    // best[mask] = min over a in mask of Q(mask, a).
    let mut best = vec![INFEASIBLE_COST; 1 << n];
    for mask in 1usize..(1 << n) {
        let mut m = f64::INFINITY;
        for (i, (d, props)) in actions.iter().enumerate() {
            if mask & (1 << i) == 0 {
                continue;
            }
            let rest = best[mask & !(1 << i)];
            let q = d + props.p_s * props.r_s + (1.0 - props.p_s) * (props.r_e + rest);
            m = m.min(q);
        }
        best[mask] = m;
    }
    let full = (1 << n) - 1;
    (0..n)
        .map(|i| {
            let (d, props) = &actions[i];
            let rest = best[full & !(1 << i)];
            d + props.p_s * props.r_s + (1.0 - props.p_s) * (props.r_e + rest)
        })
        .collect()
}

// ── Action evaluation and selection ──────────────────────────────────────

/// Score every viable frontier.
///
/// Frontiers whose goal is unreachable even through unknown space, or that
/// cannot be reached through known space, are dropped. When more than
/// [`MAX_EXACT_ACTIONS`] remain, the ones with the smallest known-cost plus
/// optimistic goal distance are kept and evaluated exactly.
pub fn evaluate_actions(
    belief: &Belief,
    frontiers: &[Frontier],
    estimator: &dyn SubgoalEstimator,
) -> Result<Vec<ActionEvaluation>, PlannerError> {
    if frontiers.is_empty() {
        return Err(PlannerError::NoActions);
    }
    let pose_grid = cost_grid(&belief.map, &[belief.pose.cell()], UnknownRule::Blocked)?;
    let goal_grid = cost_grid(&belief.map, &[belief.goal], UnknownRule::Traversable)?;

    // (frontier index, D, optimistic distance to goal)
    let mut viable: Vec<(usize, f64, f64)> = Vec::with_capacity(frontiers.len());
    for (i, f) in frontiers.iter().enumerate() {
        let d = f
            .cells()
            .iter()
            .map(|&c| pose_grid.cost(c))
            .fold(f64::INFINITY, f64::min);
        let opt = goal_grid.cost(f.centroid());
        if d.is_finite() && opt.is_finite() {
            viable.push((i, d, opt));
        }
    }
    if viable.len() > MAX_EXACT_ACTIONS {
        viable.sort_by(|a, b| {
            (a.1 + a.2).total_cmp(&(b.1 + b.2)).then_with(|| {
                frontiers[a.0]
                    .centroid()
                    .row_major_key()
                    .cmp(&frontiers[b.0].centroid().row_major_key())
            })
        });
        viable.truncate(MAX_EXACT_ACTIONS);
        viable.sort_by_key(|v| frontiers[v.0].centroid().row_major_key());
    }

    let mut kept: Vec<(&Frontier, f64, SubgoalProperties)> = Vec::with_capacity(viable.len());
    for &(i, d, _) in &viable {
        match estimator.estimate(&belief.map, &frontiers[i], belief.goal) {
            Ok(props) => kept.push((&frontiers[i], d, props)),
            Err(EstimatorError::UnreachableGoal(_)) => continue,
            Err(_) => continue,
        }
    }
    if kept.is_empty() {
        return Err(PlannerError::NoActions);
    }

    let inputs: Vec<(f64, SubgoalProperties)> = kept.iter().map(|(_, d, p)| (*d, *p)).collect();
    let qs = q_values(&inputs);
    Ok(kept
        .into_iter()
        .zip(qs)
        .map(|((frontier, d, props), q)| ActionEvaluation {
            frontier: frontier.clone(),
            d,
            props,
            q,
        })
        .collect())
}

/// Index of the evaluation with minimal expected cost; ties break toward
/// the centroid earliest in row-major order.
pub fn select_action(evaluations: &[ActionEvaluation]) -> usize {
    assert!(!evaluations.is_empty(), "select_action needs evaluations");
    let mut best = 0;
    for i in 1..evaluations.len() {
        let (a, b) = (&evaluations[i], &evaluations[best]);
        let better = match a.q.total_cmp(&b.q) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => {
                a.frontier.centroid().row_major_key() < b.frontier.centroid().row_major_key()
            }
        };
        if better {
            best = i;
        }
    }
    best
}

/// One gradient-descent grid step on a cost field sourced at the targets.
fn descend(belief: &Belief, grid: &CostGrid) -> Result<(Pose, f64), PlannerError> {
    let pose = belief.pose.cell();
    let here = grid.cost(pose);
    if !here.is_finite() {
        return Err(PlannerError::Unreachable);
    }
    const MOVES: [(i64, i64); 8] = [
        (-1, -1),
        (0, -1),
        (1, -1),
        (-1, 0),
        (1, 0),
        (-1, 1),
        (0, 1),
        (1, 1),
    ];
    let traversable = |c: Cell| belief.map.get(c) == CellState::Free;
    let mut best: Option<(f64, Cell, f64)> = None;
    for (dx, dy) in MOVES {
        let (nx, ny) = (pose.x as i64 + dx, pose.y as i64 + dy);
        if !belief.map.in_bounds_i(nx, ny) {
            continue;
        }
        let n = Cell::new(nx as usize, ny as usize);
        if !traversable(n) {
            continue;
        }
        let step = if dx != 0 && dy != 0 {
            let a = Cell::new(nx as usize, pose.y);
            let b = Cell::new(pose.x, ny as usize);
            if !traversable(a) || !traversable(b) {
                continue;
            }
            std::f64::consts::SQRT_2
        } else {
            1.0
        };
        let through = step + grid.cost(n);
        // Strict improvement over the best seen, so the row-major-first
        // neighbor wins ties.
        if best.is_none() || through < best.expect("checked").0 {
            best = Some((through, n, step));
        }
    }
    match best {
        Some((through, n, step)) if through.is_finite() && grid.cost(n) < here => {
            let heading = (n.y as f64 - pose.y as f64).atan2(n.x as f64 - pose.x as f64);
            Ok((Pose::new(n.x, n.y, heading), step))
        }
        _ => Err(PlannerError::Unreachable),
    }
}

/// Move one grid step along the minimum-cost known-space path toward the
/// chosen frontier. Returns the new belief and the step cost.
pub fn step(belief: &Belief, chosen: &Frontier) -> Result<(Belief, f64), PlannerError> {
    let grid = cost_grid(&belief.map, chosen.cells(), UnknownRule::Blocked)?;
    let (pose, cost) = descend(belief, &grid)?;
    let mut next = belief.clone();
    next.advance(pose, cost);
    Ok((next, cost))
}

// ── The drive loop ───────────────────────────────────────────────────────

/// Replay-mode context threaded through the drive loop.
pub(crate) struct ReplayCtx<'a> {
    /// The recorded final belief map, unmasked.
    pub pristine: &'a GridMap,
    /// Union of recorded footprints: which cells any recorded pose saw.
    pub seen: Vec<bool>,
    /// Substitute properties for frontiers no recorded footprint covers.
    pub fallback: Estimator,
    pub exit_attempts: usize,
    pub optimistic_candidates: Vec<f64>,
}

/// Wall off the unseen space behind a frontier the replayed robot tried to
/// exit through.
///
/// The robot may be standing on the frontier itself, so the mask goes on
/// the unknown cells beyond it rather than on the frontier cells. Only
/// cells the recorded map never saw are sealed: unknown belief cells the
/// record does know are legitimate terrain the replay will reveal by
/// scanning. At least one cell is always sealed (the robot's own unknown
/// neighbor), so exits make strict progress and replay terminates.
fn mask_exit(world: &mut GridMap, belief: &mut GridMap, pristine: &GridMap, frontier: &Frontier) {
    for &member in frontier.cells() {
        let unknown_beyond: Vec<Cell> = belief
            .neighbors4(member)
            .filter(|&u| {
                belief.get(u) == CellState::Unknown && pristine.get(u) == CellState::Unknown
            })
            .collect();
        for u in unknown_beyond {
            world.set(u, CellState::Occupied);
            belief.set(u, CellState::Occupied);
        }
    }
}

/// Estimator wrapper applying the replay gate.
struct Gated<'a> {
    inner: &'a dyn SubgoalEstimator,
    fallback: &'a Estimator,
    seen: &'a [bool],
    width: usize,
}

impl SubgoalEstimator for Gated<'_> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn estimate(
        &self,
        belief: &GridMap,
        frontier: &Frontier,
        goal: Cell,
    ) -> Result<SubgoalProperties, EstimatorError> {
        let seen = frontier
            .cells()
            .iter()
            .any(|c| self.seen[c.y * self.width + c.x]);
        if seen {
            self.inner.estimate(belief, frontier, goal)
        } else {
            self.fallback.estimate(belief, frontier, goal)
        }
    }
}

/// Run the planning loop from `start` to `goal` inside `world`.
///
/// In live mode `world` is the scenario's true map. In replay mode it is a
/// working copy of the recorded `m_final`, mutated as exits get masked, and
/// `replay` collects exit attempts and optimistic candidates.
pub(crate) fn drive(
    world: &mut GridMap,
    start: Pose,
    goal: Cell,
    estimator: &dyn SubgoalEstimator,
    cfg: &TrialConfig,
    mut replay: Option<&mut ReplayCtx<'_>>,
) -> Result<(TrialResult, TrialRecord), PlannerError> {
    if cfg.sensing.range < 1.0 || cfg.sensing.n_rays < 4 {
        return Err(PlannerError::InvalidSensing(format!(
            "need range >= 1 and n_rays >= 4, got {} / {}",
            cfg.sensing.range, cfg.sensing.n_rays
        )));
    }
    let mut belief = Belief::new(GridMap::unknown(world.width(), world.height()), start, goal);
    let mut steps: Vec<RecordStep> = Vec::new();
    let mut reached = false;

    loop {
        let footprint = simulate_scan(world, belief.pose, cfg.sensing.range, cfg.sensing.n_rays)?;
        belief.map = update_belief(&belief.map, world, &footprint)?;
        steps.push(RecordStep {
            pose: belief.pose,
            footprint,
        });
        if belief.pose.cell() == goal {
            reached = true;
            break;
        }
        if belief.step_count >= cfg.step_cap {
            break;
        }

        // Straight to the goal once it is known and reachable; subgoals only
        // cover unseen space.
        if belief.map.get(goal) == CellState::Free {
            let goal_grid = cost_grid(&belief.map, &[goal], UnknownRule::Blocked)?;
            if goal_grid.cost(belief.pose.cell()).is_finite() {
                let (pose, cost) = descend(&belief, &goal_grid)?;
                belief.advance(pose, cost);
                continue;
            }
        }

        // Pick a frontier; replay may mask exits and replan within this
        // inner loop.
        let chosen = loop {
            let frontiers = extract_frontiers(&belief.map, cfg.frontier_min_size);
            let evals = {
                let result = match replay.as_deref() {
                    Some(ctx) => {
                        let gated = Gated {
                            inner: estimator,
                            fallback: &ctx.fallback,
                            seen: &ctx.seen,
                            width: belief.map.width(),
                        };
                        evaluate_actions(&belief, &frontiers, &gated)
                    }
                    None => evaluate_actions(&belief, &frontiers, estimator),
                };
                match result {
                    Ok(evals) => evals,
                    Err(PlannerError::NoActions) => break None,
                    Err(e) => return Err(e),
                }
            };
            let pick = &evals[select_action(&evals)];

            if let Some(ctx) = replay.as_deref_mut() {
                if pick.d == 0.0 {
                    // The robot stands on the frontier: its next step would
                    // cross into space the recorded map does not know. Log
                    // an optimistic candidate, wall the exit off, replan.
                    let known =
                        cost_grid(&belief.map, &[belief.pose.cell()], UnknownRule::Blocked)?;
                    let to_centroid = known.cost(pick.frontier.centroid());
                    let through = shortest_path_cost(
                        ctx.pristine,
                        pick.frontier.centroid(),
                        goal,
                        UnknownRule::Traversable,
                    )?;
                    if to_centroid.is_finite() && through.is_finite() {
                        ctx.optimistic_candidates
                            .push(belief.distance_traveled + to_centroid + through);
                    }
                    ctx.exit_attempts += 1;
                    mask_exit(world, &mut belief.map, ctx.pristine, &pick.frontier);
                    continue;
                }
            }
            break Some(pick.frontier.clone());
        };
        let Some(chosen) = chosen else {
            // Frontiers exhausted without finding the goal.
            break;
        };

        let target_grid = cost_grid(&belief.map, chosen.cells(), UnknownRule::Blocked)?;
        let (pose, cost) = descend(&belief, &target_grid)?;
        belief.advance(pose, cost);
    }

    let result = TrialResult {
        cost: belief.distance_traveled,
        trajectory: steps.iter().map(|s| s.pose).collect(),
        reached,
        scenario_id: String::new(),
        policy: estimator.name().to_string(),
    };
    let record = TrialRecord {
        steps,
        m_final: belief.map,
    };
    Ok((result, record))
}

/// Run one live trial on a scenario.
///
/// The loop always terminates: either the goal is reached (guaranteed when a
/// feasible path exists and the cap is generous), the frontier set runs
/// empty, or the step cap trips — the latter two report `reached = false`
/// with the cost accumulated so far.
pub fn navigate_trial(
    scenario: &Scenario,
    estimator: &dyn SubgoalEstimator,
    cfg: &TrialConfig,
) -> Result<(TrialResult, TrialRecord), PlannerError> {
    let mut world = scenario.true_map.clone();
    let start = Pose::new(scenario.start.x, scenario.start.y, 0.0);
    let (mut result, record) = drive(&mut world, start, scenario.goal, estimator, cfg, None)?;
    result.scenario_id = scenario.id.clone();
    Ok((result, record))
}

// ── Record files ─────────────────────────────────────────────────────────

/// Inline map object used inside record files.
#[derive(Debug, Serialize, Deserialize)]
pub struct MapJson {
    pub width: usize,
    pub height: usize,
    pub cells: String,
    pub features: Vec<u8>,
}

impl MapJson {
    pub fn from_map(map: &GridMap) -> Self {
        MapJson {
            width: map.width(),
            height: map.height(),
            cells: map.encode_cells(),
            features: map.features_vec().to_vec(),
        }
    }

    pub fn to_map(&self) -> Option<GridMap> {
        let cells = GridMap::decode_cells(&self.cells)?;
        GridMap::from_parts(self.width, self.height, cells, self.features.clone()).ok()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct StepJson {
    pose: (usize, usize, f64),
    footprint: Vec<[usize; 2]>,
}

/// Persisted trial: the record plus its result header.
#[derive(Debug, Serialize, Deserialize)]
pub struct RecordFile {
    pub scenario_id: String,
    pub policy: String,
    steps: Vec<StepJson>,
    m_final: MapJson,
    pub cost: f64,
    pub reached: bool,
}

impl RecordFile {
    pub fn new(result: &TrialResult, record: &TrialRecord) -> Self {
        RecordFile {
            scenario_id: result.scenario_id.clone(),
            policy: result.policy.clone(),
            steps: record
                .steps
                .iter()
                .map(|s| StepJson {
                    pose: (s.pose.x, s.pose.y, s.pose.heading),
                    footprint: s.footprint.iter().map(|c| [c.x, c.y]).collect(),
                })
                .collect(),
            m_final: MapJson::from_map(&record.m_final),
            cost: result.cost,
            reached: result.reached,
        }
    }

    pub fn into_parts(self) -> Option<(TrialResult, TrialRecord)> {
        let m_final = self.m_final.to_map()?;
        let steps: Vec<RecordStep> = self
            .steps
            .into_iter()
            .map(|s| RecordStep {
                pose: Pose::new(s.pose.0, s.pose.1, s.pose.2),
                footprint: s
                    .footprint
                    .into_iter()
                    .map(|[x, y]| Cell::new(x, y))
                    .collect(),
            })
            .collect();
        let result = TrialResult {
            cost: self.cost,
            trajectory: steps.iter().map(|s| s.pose).collect(),
            reached: self.reached,
            scenario_id: self.scenario_id,
            policy: self.policy,
        };
        Some((result, TrialRecord { steps, m_final }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envgen::{scenario_id, EnvFamily};
    use approx::assert_relative_eq;

    fn props(p_s: f64, r_s: f64, r_e: f64) -> SubgoalProperties {
        SubgoalProperties { p_s, r_s, r_e }
    }

    #[test]
    fn single_certain_action_collapses() {
        let q = q_values(&[(5.0, props(1.0, 10.0, 0.0))]);
        assert_relative_eq!(q[0], 15.0);
    }

    #[test]
    fn two_action_example() {
        // a1: D=2, p=0.8, rs=10, re=3; a2: D=4, p=1, rs=6.
        let q = q_values(&[(2.0, props(0.8, 10.0, 3.0)), (4.0, props(1.0, 6.0, 0.0))]);
        assert_relative_eq!(q[0], 12.6); // 2 + 8 + 0.2 * (3 + 10)
        assert_relative_eq!(q[1], 10.0);
    }

    #[test]
    fn lone_fallible_action_is_near_infeasible() {
        let q = q_values(&[(1.0, props(0.5, 5.0, 2.0))]);
        assert!(q[0] >= 0.5 * INFEASIBLE_COST);
    }

    fn eval(frontier: Frontier, d: f64, q: f64) -> ActionEvaluation {
        ActionEvaluation {
            frontier,
            d,
            props: props(1.0, 0.0, 0.0),
            q,
        }
    }

    fn frontier_at(x: usize, y: usize) -> Frontier {
        let mut m = GridMap::unknown(8, 8);
        m.set(Cell::new(x, y), CellState::Free);
        extract_frontiers(&m, 1).remove(0)
    }

    #[test]
    fn select_single() {
        let evals = vec![eval(frontier_at(3, 3), 1.0, 9.0)];
        assert_eq!(select_action(&evals), 0);
    }

    #[test]
    fn select_minimum_q() {
        let evals = vec![
            eval(frontier_at(1, 1), 2.0, 12.6),
            eval(frontier_at(5, 5), 4.0, 10.0),
        ];
        assert_eq!(select_action(&evals), 1);
    }

    #[test]
    fn select_breaks_ties_row_major() {
        let evals = vec![
            eval(frontier_at(4, 2), 1.0, 7.0),
            eval(frontier_at(1, 2), 1.0, 7.0),
            eval(frontier_at(3, 1), 1.0, 7.0),
        ];
        assert_eq!(select_action(&evals), 2);
    }

    /// A belief with the west half free and a single-cell frontier.
    fn walkable_belief(pose: (usize, usize)) -> (Belief, Frontier) {
        let mut m = GridMap::unknown(5, 5);
        for y in 0..5 {
            for x in 0..3 {
                m.set(Cell::new(x, y), CellState::Free);
            }
        }
        // Make exactly one boundary cell by occupying the rest of column 2.
        for y in 0..5 {
            if y != 2 {
                m.set(Cell::new(2, y), CellState::Occupied);
            }
        }
        let fs = extract_frontiers(&m, 1);
        assert_eq!(fs.len(), 1);
        let belief = Belief::new(m, Pose::new(pose.0, pose.1, 0.0), Cell::new(4, 4));
        (belief, fs[0].clone())
    }

    #[test]
    fn step_axis_costs_one() {
        let (belief, f) = walkable_belief((1, 2));
        let (next, cost) = step(&belief, &f).unwrap();
        assert_relative_eq!(cost, 1.0);
        assert_eq!(next.pose.cell(), Cell::new(2, 2));
        assert_relative_eq!(next.distance_traveled, 1.0);
    }

    #[test]
    fn step_diagonal_costs_sqrt2() {
        // Single-cell frontier at (2,2) reachable diagonally from (1,1);
        // both shared cells are free so the corner may be rounded.
        let mut m = GridMap::unknown(5, 5);
        for &(x, y) in &[(1, 1), (2, 1), (1, 2), (2, 2)] {
            m.set(Cell::new(x, y), CellState::Free);
        }
        for &(x, y) in &[(1, 0), (2, 0), (0, 1), (3, 1), (0, 2), (1, 3), (2, 3)] {
            m.set(Cell::new(x, y), CellState::Occupied);
        }
        let fs = extract_frontiers(&m, 1);
        assert_eq!(fs.len(), 1);
        assert_eq!(fs[0].cells(), &[Cell::new(2, 2)]);
        let belief = Belief::new(m, Pose::new(1, 1, 0.0), Cell::new(4, 4));
        let (next, cost) = step(&belief, &fs[0]).unwrap();
        assert_relative_eq!(cost, std::f64::consts::SQRT_2);
        assert_eq!(next.pose.cell(), Cell::new(2, 2));
    }

    #[test]
    fn step_to_walled_off_frontier_fails() {
        let (mut belief, f) = walkable_belief((0, 0));
        // Wall the frontier off in the belief.
        belief.map.set(Cell::new(1, 1), CellState::Occupied);
        belief.map.set(Cell::new(1, 2), CellState::Occupied);
        belief.map.set(Cell::new(1, 3), CellState::Occupied);
        assert!(matches!(step(&belief, &f), Err(PlannerError::Unreachable)));
    }

    fn one_room_scenario() -> Scenario {
        let map = GridMap::filled(9, 7, CellState::Free);
        Scenario {
            true_map: map,
            start: Cell::new(1, 1),
            goal: Cell::new(7, 5),
            family: EnvFamily::MazeGreen,
            seed: 0,
            id: scenario_id(EnvFamily::MazeGreen, 0),
        }
    }

    #[test]
    fn goal_in_first_scan_costs_shortest_path() {
        let scenario = one_room_scenario();
        let cfg = TrialConfig {
            sensing: SensingParams {
                range: 20.0,
                n_rays: 360,
            },
            step_cap: 200,
            frontier_min_size: 1,
        };
        let est = Estimator::non_learned();
        let (result, record) = navigate_trial(&scenario, &est, &cfg).unwrap();
        assert!(result.reached);
        let oracle = shortest_path_cost(
            &record.m_final,
            scenario.start,
            scenario.goal,
            UnknownRule::Blocked,
        )
        .unwrap();
        assert_relative_eq!(result.cost, oracle, max_relative = 1e-9);
    }

    #[test]
    fn walled_goal_exhausts_frontiers() {
        let mut map = GridMap::filled(9, 7, CellState::Free);
        // Seal the goal in a chamber.
        for (x, y) in [(6, 4), (7, 4), (8, 4), (6, 5), (6, 6)] {
            map.set(Cell::new(x, y), CellState::Occupied);
        }
        let scenario = Scenario {
            true_map: map,
            start: Cell::new(1, 1),
            goal: Cell::new(7, 5),
            family: EnvFamily::MazeGreen,
            seed: 1,
            id: "walled".into(),
        };
        let cfg = TrialConfig {
            sensing: SensingParams::default(),
            step_cap: 500,
            frontier_min_size: 1,
        };
        let (result, _) = navigate_trial(&scenario, &Estimator::non_learned(), &cfg).unwrap();
        assert!(!result.reached);
    }

    #[test]
    fn cost_equals_trajectory_step_sum() {
        let scenario = one_room_scenario();
        let cfg = TrialConfig {
            sensing: SensingParams::default(),
            step_cap: 200,
            frontier_min_size: 1,
        };
        let (result, _) = navigate_trial(&scenario, &Estimator::non_learned(), &cfg).unwrap();
        let replayed: f64 = result
            .trajectory
            .windows(2)
            .map(|w| w[0].cell().distance(w[1].cell()))
            .sum();
        assert_relative_eq!(result.cost, replayed, max_relative = 1e-9);
    }

    #[test]
    fn record_file_round_trip() {
        let scenario = one_room_scenario();
        let cfg = TrialConfig {
            sensing: SensingParams::default(),
            step_cap: 200,
            frontier_min_size: 1,
        };
        let (result, record) = navigate_trial(&scenario, &Estimator::non_learned(), &cfg).unwrap();
        let file = RecordFile::new(&result, &record);
        let json = serde_json::to_string(&file).unwrap();
        let back: RecordFile = serde_json::from_str(&json).unwrap();
        let (r2, rec2) = back.into_parts().unwrap();
        assert_eq!(r2.cost, result.cost);
        assert_eq!(rec2.m_final, record.m_final);
        assert_eq!(rec2.steps.len(), record.steps.len());
    }

    #[test]
    fn degenerate_sensing_is_rejected() {
        let scenario = one_room_scenario();
        let cfg = TrialConfig {
            sensing: SensingParams {
                range: 0.5,
                n_rays: 360,
            },
            step_cap: 10,
            frontier_min_size: 1,
        };
        let r = navigate_trial(&scenario, &Estimator::non_learned(), &cfg);
        assert!(matches!(r, Err(PlannerError::InvalidSensing(_))));
    }
}
