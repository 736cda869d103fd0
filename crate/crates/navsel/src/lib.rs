//! Deterministic 2D partial-map navigation testbed.
//!
//! A robot explores procedurally generated grid worlds (mazes and office
//! floors) toward a point goal it has not yet seen. High-level actions are
//! *frontiers* — boundaries between known-free and unknown space — scored by
//! pluggable subgoal-property estimators through a factored Bellman
//! recursion. Every trial is recorded (poses plus visibility footprints plus
//! the final belief map) so that the other policies on the roster can be
//! *replayed offline* inside the recorded map, yielding per-policy cost
//! lower bounds that constrain UCB-style bandit selection across trials.
//!
//! Module map:
//! - [`gridmap`]: occupancy grids, ray-cast sensing, frontiers, Dijkstra.
//! - [`envgen`]: seeded maze and office scenario generators.
//! - [`estimators`]: subgoal-property estimators and tabular training.
//! - [`planner`]: the subgoal planning loop and trial recording.
//! - [`replay`]: offline alt-policy replay and cost lower bounds.
//! - [`selection`]: UCB and constrained-UCB policy selection, regret.
//! - [`harness`]: experiment orchestration (precompute, deploy, report).

pub mod envgen;
pub mod estimators;
pub mod gridmap;
pub mod harness;
pub mod planner;
pub mod replay;
pub mod selection;
