use serde::{Deserialize, Serialize};

use super::GridError;

/// State of one grid cell.
///
/// Belief maps may contain `Unknown`; fully specified world maps must not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Unknown,
    Free,
    Occupied,
}

impl CellState {
    pub fn to_char(self) -> char {
        match self {
            CellState::Unknown => 'U',
            CellState::Free => 'F',
            CellState::Occupied => 'O',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'U' => Some(CellState::Unknown),
            'F' => Some(CellState::Free),
            'O' => Some(CellState::Occupied),
            _ => None,
        }
    }
}

/// A grid coordinate. `y` increases downward; indexing is row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    /// Row-major sort key: by `y`, then `x`.
    pub fn row_major_key(&self) -> (usize, usize) {
        (self.y, self.x)
    }

    /// Euclidean distance between cell centers, in cell-lengths.
    pub fn distance(&self, other: Cell) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Robot pose. The heading is carried along for record fidelity; the
/// omnidirectional scan never reads it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: usize,
    pub y: usize,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: usize, y: usize, heading: f64) -> Self {
        Pose { x, y, heading }
    }

    pub fn cell(&self) -> Cell {
        Cell::new(self.x, self.y)
    }
}

/// An occupancy grid with a per-cell feature label.
///
/// The same type serves as a ground-truth world map (no `Unknown` cells) and
/// as a belief map built up from scans. Feature labels are small integers
/// (0 = plain) and are meaningful only on free cells. Operations follow an
/// immutable-by-copy discipline: mutating helpers exist, but the public
/// operations in this module take `&GridMap` and return new maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    width: usize,
    height: usize,
    cells: Vec<CellState>,
    features: Vec<u8>,
}

impl GridMap {
    /// A map of the given size with every cell in `state` and feature 0.
    pub fn filled(width: usize, height: usize, state: CellState) -> Self {
        GridMap {
            width,
            height,
            cells: vec![state; width * height],
            features: vec![0; width * height],
        }
    }

    /// An all-`Unknown` map, the starting belief for a trial.
    pub fn unknown(width: usize, height: usize) -> Self {
        Self::filled(width, height, CellState::Unknown)
    }

    pub fn from_parts(
        width: usize,
        height: usize,
        cells: Vec<CellState>,
        features: Vec<u8>,
    ) -> Result<Self, GridError> {
        if cells.len() != width * height || features.len() != width * height {
            return Err(GridError::DimensionMismatch {
                w1: width,
                h1: height,
                w2: cells.len(),
                h2: features.len(),
            });
        }
        Ok(GridMap {
            width,
            height,
            cells,
            features,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height
    }

    pub fn in_bounds_i(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    fn index(&self, cell: Cell) -> usize {
        debug_assert!(self.in_bounds(cell.x, cell.y));
        cell.y * self.width + cell.x
    }

    pub fn get(&self, cell: Cell) -> CellState {
        self.cells[self.index(cell)]
    }

    pub fn feature(&self, cell: Cell) -> u8 {
        self.features[self.index(cell)]
    }

    pub fn set(&mut self, cell: Cell, state: CellState) {
        let i = self.index(cell);
        self.cells[i] = state;
    }

    pub fn set_feature(&mut self, cell: Cell, label: u8) {
        let i = self.index(cell);
        self.features[i] = label;
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.get(cell) == CellState::Free
    }

    /// Iterate over all cell coordinates in row-major order.
    pub fn iter_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let w = self.width;
        (0..self.width * self.height).map(move |i| Cell::new(i % w, i / w))
    }

    /// Number of cells in a given state.
    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }

    /// The 4-neighbors of `cell` that lie in bounds.
    pub fn neighbors4(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        const OFFS: [(i64, i64); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
        OFFS.iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (cell.x as i64 + dx, cell.y as i64 + dy);
            self.in_bounds_i(nx, ny)
                .then(|| Cell::new(nx as usize, ny as usize))
        })
    }

    /// The 8-neighbors of `cell` that lie in bounds, row-major order.
    pub fn neighbors8(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        const OFFS: [(i64, i64); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        OFFS.iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (cell.x as i64 + dx, cell.y as i64 + dy);
            self.in_bounds_i(nx, ny)
                .then(|| Cell::new(nx as usize, ny as usize))
        })
    }

    /// Encode the cell states as one row-major character per cell.
    pub fn encode_cells(&self) -> String {
        self.cells.iter().map(|c| c.to_char()).collect()
    }

    /// Decode a cell-state string produced by [`GridMap::encode_cells`].
    pub fn decode_cells(s: &str) -> Option<Vec<CellState>> {
        s.chars().map(CellState::from_char).collect()
    }

    pub fn features_vec(&self) -> &[u8] {
        &self.features
    }
}
