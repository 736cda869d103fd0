use std::collections::VecDeque;

use super::{Cell, CellState, GridError, GridMap};

/// A maximal 8-connected set of free cells that border unknown space — the
/// planner's high-level action.
///
/// Member cells are kept sorted in row-major order. The centroid is the
/// member cell nearest the component's arithmetic mean and is used as the
/// frontier's representative point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frontier {
    cells: Vec<Cell>,
    centroid: Cell,
}

impl Frontier {
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn centroid(&self) -> Cell {
        self.centroid
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells
            .binary_search_by_key(&cell.row_major_key(), |c| c.row_major_key())
            .is_ok()
    }
}

/// True for free cells 4-adjacent to at least one unknown cell.
fn is_boundary(map: &GridMap, cell: Cell) -> bool {
    map.is_free(cell)
        && map
            .neighbors4(cell)
            .any(|n| map.get(n) == CellState::Unknown)
}

/// Extract all frontiers of a belief map, sorted by centroid in row-major
/// order. Components with fewer than `min_size` cells are dropped.
pub fn extract_frontiers(map: &GridMap, min_size: usize) -> Vec<Frontier> {
    let w = map.width();
    let mut boundary = vec![false; w * map.height()];
    for cell in map.iter_cells() {
        if is_boundary(map, cell) {
            boundary[cell.y * w + cell.x] = true;
        }
    }

    let mut seen = vec![false; boundary.len()];
    let mut frontiers = Vec::new();
    for start in map.iter_cells() {
        let si = start.y * w + start.x;
        if !boundary[si] || seen[si] {
            continue;
        }
        // Flood one 8-connected component of boundary cells.
        let mut cells = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[si] = true;
        while let Some(cell) = queue.pop_front() {
            cells.push(cell);
            for n in map.neighbors8(cell) {
                let ni = n.y * w + n.x;
                if boundary[ni] && !seen[ni] {
                    seen[ni] = true;
                    queue.push_back(n);
                }
            }
        }
        if cells.len() < min_size.max(1) {
            continue;
        }
        cells.sort_by_key(Cell::row_major_key);

        let n = cells.len() as f64;
        let mean_x = cells.iter().map(|c| c.x as f64).sum::<f64>() / n;
        let mean_y = cells.iter().map(|c| c.y as f64).sum::<f64>() / n;
        // Nearest member to the mean; ties resolve to the first in row-major
        // order because elements are visited in that order with a strict "<".
        let centroid = cells
            .iter()
            .copied()
            .fold((f64::INFINITY, cells[0]), |(best, bc), c| {
                let d = (c.x as f64 - mean_x).powi(2) + (c.y as f64 - mean_y).powi(2);
                if d < best {
                    (d, c)
                } else {
                    (best, bc)
                }
            })
            .1;

        frontiers.push(Frontier { cells, centroid });
    }

    frontiers.sort_by_key(|f| f.centroid.row_major_key());
    frontiers
}

/// Return a copy of `map` with every cell of `frontier` set to `Occupied`.
pub fn mask_frontier(map: &GridMap, frontier: &Frontier) -> Result<GridMap, GridError> {
    for &c in frontier.cells() {
        if !map.is_free(c) {
            return Err(GridError::InvalidFrontier { x: c.x, y: c.y });
        }
    }
    let mut out = map.clone();
    for &c in frontier.cells() {
        out.set(c, CellState::Occupied);
    }
    Ok(out)
}
