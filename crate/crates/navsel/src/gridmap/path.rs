use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Cell, CellState, GridError, GridMap};

/// Sentinel travel cost for cells that cannot be reached.
pub const UNREACHABLE: f64 = f64::INFINITY;

/// How `Unknown` cells are treated during path search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownRule {
    /// Unknown cells block movement (plan only through observed free space).
    Blocked,
    /// Unknown cells are assumed free (optimistic planning through them).
    Traversable,
}

/// Per-cell travel cost from a source set, in cell-lengths.
/// Unreached cells hold [`UNREACHABLE`].
#[derive(Debug, Clone)]
pub struct CostGrid {
    width: usize,
    height: usize,
    costs: Vec<f64>,
}

impl CostGrid {
    pub fn cost(&self, cell: Cell) -> f64 {
        self.costs[cell.y * self.width + cell.x]
    }

    pub fn is_reachable(&self, cell: Cell) -> bool {
        self.cost(cell).is_finite()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Largest finite cost, if any cell is reachable.
    pub fn max_finite(&self) -> Option<f64> {
        self.costs
            .iter()
            .copied()
            .filter(|c| c.is_finite())
            .fold(None, |acc, c| Some(acc.map_or(c, |a: f64| a.max(c))))
    }
}

fn traversable(map: &GridMap, cell: Cell, rule: UnknownRule) -> bool {
    match map.get(cell) {
        CellState::Free => true,
        CellState::Occupied => false,
        CellState::Unknown => rule == UnknownRule::Traversable,
    }
}

/// Heap entry ordered so the smallest cost pops first; ties break on the
/// cell index for fully deterministic expansion order.
#[derive(PartialEq)]
struct Entry {
    cost: f64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// 8-connected moves in row-major order with their step costs.
const MOVES: [(i64, i64, f64); 8] = [
    (-1, -1, SQRT_2),
    (0, -1, 1.0),
    (1, -1, SQRT_2),
    (-1, 0, 1.0),
    (1, 0, 1.0),
    (-1, 1, SQRT_2),
    (0, 1, 1.0),
    (1, 1, SQRT_2),
];

/// Dijkstra travel costs from a set of source cells.
///
/// Moves are 8-connected with unit axis steps and `sqrt(2)` diagonals. A
/// diagonal move is forbidden when either of the two orthogonally shared
/// cells is non-traversable (no corner cutting). Occupied cells always
/// block; `Unknown` cells block or pass per `rule`.
pub fn cost_grid(
    map: &GridMap,
    sources: &[Cell],
    rule: UnknownRule,
) -> Result<CostGrid, GridError> {
    if sources.is_empty() {
        return Err(GridError::InvalidSource {
            reason: "empty source set".into(),
        });
    }
    let (w, h) = (map.width(), map.height());
    let mut costs = vec![UNREACHABLE; w * h];
    let mut heap = BinaryHeap::new();

    for &s in sources {
        if !map.in_bounds(s.x, s.y) || !traversable(map, s, rule) {
            return Err(GridError::InvalidSource {
                reason: format!("source ({}, {}) is not traversable", s.x, s.y),
            });
        }
        let i = s.y * w + s.x;
        if costs[i] > 0.0 {
            costs[i] = 0.0;
            heap.push(Entry {
                cost: 0.0,
                index: i,
            });
        }
    }

    while let Some(Entry { cost, index }) = heap.pop() {
        if cost > costs[index] {
            continue;
        }
        let (cx, cy) = ((index % w) as i64, (index / w) as i64);
        for &(dx, dy, step) in &MOVES {
            let (nx, ny) = (cx + dx, cy + dy);
            if !map.in_bounds_i(nx, ny) {
                continue;
            }
            let ncell = Cell::new(nx as usize, ny as usize);
            if !traversable(map, ncell, rule) {
                continue;
            }
            if dx != 0 && dy != 0 {
                // No corner cutting: both orthogonally shared cells must be
                // traversable.
                let side_a = Cell::new((cx + dx) as usize, cy as usize);
                let side_b = Cell::new(cx as usize, (cy + dy) as usize);
                if !traversable(map, side_a, rule) || !traversable(map, side_b, rule) {
                    continue;
                }
            }
            let ni = ncell.y * w + ncell.x;
            let ncost = cost + step;
            if ncost < costs[ni] {
                costs[ni] = ncost;
                heap.push(Entry {
                    cost: ncost,
                    index: ni,
                });
            }
        }
    }

    Ok(CostGrid {
        width: w,
        height: h,
        costs,
    })
}

/// Travel cost between two cells, or [`UNREACHABLE`].
pub fn shortest_path_cost(
    map: &GridMap,
    from: Cell,
    to: Cell,
    rule: UnknownRule,
) -> Result<f64, GridError> {
    let grid = cost_grid(map, &[from], rule)?;
    Ok(grid.cost(to))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn free_map(w: usize, h: usize) -> GridMap {
        GridMap::filled(w, h, CellState::Free)
    }

    #[test]
    fn straight_corridor_cost() {
        let m = free_map(5, 1);
        let g = cost_grid(&m, &[Cell::new(0, 0)], UnknownRule::Blocked).unwrap();
        assert_relative_eq!(g.cost(Cell::new(4, 0)), 4.0);
    }

    #[test]
    fn single_diagonal_cost() {
        let m = free_map(3, 3);
        let g = cost_grid(&m, &[Cell::new(0, 0)], UnknownRule::Blocked).unwrap();
        assert_relative_eq!(g.cost(Cell::new(1, 1)), SQRT_2);
    }

    #[test]
    fn wall_disconnects_under_blocked_rule() {
        let mut m = free_map(5, 3);
        for y in 0..3 {
            m.set(Cell::new(2, y), CellState::Occupied);
        }
        let g = cost_grid(&m, &[Cell::new(0, 1)], UnknownRule::Blocked).unwrap();
        assert_eq!(g.cost(Cell::new(4, 1)), UNREACHABLE);
    }

    #[test]
    fn corner_cutting_is_forbidden() {
        // Diagonal from (0,1) to (1,0) must detour when (1,1) and (0,0) are
        // blocked... here block only one shared cell and check the cost is a
        // detour, not sqrt(2).
        let mut m = free_map(2, 2);
        m.set(Cell::new(0, 0), CellState::Occupied);
        let g = cost_grid(&m, &[Cell::new(0, 1)], UnknownRule::Blocked).unwrap();
        assert_relative_eq!(g.cost(Cell::new(1, 0)), 2.0); // via (1,1)
    }

    #[test]
    fn unknown_rule_controls_passage() {
        let mut m = free_map(3, 1);
        m.set(Cell::new(1, 0), CellState::Unknown);
        let blocked =
            shortest_path_cost(&m, Cell::new(0, 0), Cell::new(2, 0), UnknownRule::Blocked).unwrap();
        let open = shortest_path_cost(
            &m,
            Cell::new(0, 0),
            Cell::new(2, 0),
            UnknownRule::Traversable,
        )
        .unwrap();
        assert_eq!(blocked, UNREACHABLE);
        assert_relative_eq!(open, 2.0);
    }

    #[test]
    fn shortest_path_identity_and_corridor() {
        let m = free_map(3, 1);
        assert_relative_eq!(
            shortest_path_cost(&m, Cell::new(1, 0), Cell::new(1, 0), UnknownRule::Blocked).unwrap(),
            0.0
        );
        assert_relative_eq!(
            shortest_path_cost(&m, Cell::new(0, 0), Cell::new(2, 0), UnknownRule::Blocked).unwrap(),
            2.0
        );
    }

    #[test]
    fn to_unknown_under_blocked_is_unreachable() {
        let mut m = free_map(3, 1);
        m.set(Cell::new(2, 0), CellState::Unknown);
        let c =
            shortest_path_cost(&m, Cell::new(0, 0), Cell::new(2, 0), UnknownRule::Blocked).unwrap();
        assert_eq!(c, UNREACHABLE);
    }

    #[test]
    fn empty_or_blocked_sources_error() {
        let m = free_map(3, 3);
        assert!(cost_grid(&m, &[], UnknownRule::Blocked).is_err());
        let mut m2 = free_map(3, 3);
        m2.set(Cell::new(1, 1), CellState::Occupied);
        assert!(cost_grid(&m2, &[Cell::new(1, 1)], UnknownRule::Blocked).is_err());
    }
}
