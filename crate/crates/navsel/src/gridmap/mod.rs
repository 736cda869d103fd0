//! Occupancy-grid representation and the low-level machinery shared by
//! planning, replay, and environment generation: simulated range sensing,
//! frontier extraction, and shortest-path cost grids.
//!
//! Grids are row-major with `y` increasing downward. All operations are pure:
//! they take grids by reference and return new values, so everything here is
//! safe to share across threads.

mod frontier;
mod grid;
mod path;
mod scan;

pub use frontier::{extract_frontiers, mask_frontier, Frontier};
pub use grid::{Cell, CellState, GridMap, Pose};
pub use path::{cost_grid, shortest_path_cost, CostGrid, UnknownRule, UNREACHABLE};
pub use scan::{simulate_scan, update_belief};

use thiserror::Error;

/// Errors from grid operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    /// A pose or cell lies outside the grid or on a non-free cell.
    #[error("pose ({x}, {y}) is out of bounds or not free")]
    OutOfBounds { x: usize, y: usize },
    /// Two grids that must share dimensions do not.
    #[error("dimension mismatch: {w1}x{h1} vs {w2}x{h2}")]
    DimensionMismatch {
        w1: usize,
        h1: usize,
        w2: usize,
        h2: usize,
    },
    /// A cost-grid source set is empty or contains a non-traversable cell.
    #[error("invalid source set: {reason}")]
    InvalidSource { reason: String },
    /// A frontier to be masked contains a cell that is not free.
    #[error("invalid frontier: cell ({x}, {y}) is not free")]
    InvalidFrontier { x: usize, y: usize },
}
