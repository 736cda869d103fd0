use std::collections::BTreeSet;

use super::{Cell, CellState, GridError, GridMap, Pose};

/// Tolerance for deciding that a ray crosses a gridline corner exactly.
const CORNER_EPS: f64 = 1e-12;

/// Slack on the range test so cells at exactly `range` are included.
const RANGE_EPS: f64 = 1e-9;

/// Cast `n_rays` equal-angle rays from `pose` and return every cell they
/// visit, in row-major order.
///
/// Rays march cell by cell (supercover grid traversal: crossing a gridline
/// corner visits both side cells before the diagonal). A ray ends at the
/// first non-free cell it visits, which is itself included in the footprint —
/// walls are seen, not seen through. On a partial map, `Unknown` cells
/// occlude the same way, so nothing is ever revealed behind unobserved
/// space. Cells whose center lies farther than `range` from the pose are
/// excluded and end the ray. The pose cell is always included.
pub fn simulate_scan(
    map: &GridMap,
    pose: Pose,
    range: f64,
    n_rays: usize,
) -> Result<BTreeSet<Cell>, GridError> {
    if !map.in_bounds(pose.x, pose.y) || !map.is_free(pose.cell()) {
        return Err(GridError::OutOfBounds {
            x: pose.x,
            y: pose.y,
        });
    }
    let origin = pose.cell();
    let mut footprint = BTreeSet::new();
    footprint.insert(origin);
    if range <= 0.0 {
        return Ok(footprint);
    }

    for ray in 0..n_rays {
        let theta = std::f64::consts::TAU * ray as f64 / n_rays as f64;
        march_ray(map, origin, theta.cos(), theta.sin(), range, &mut footprint);
    }
    Ok(footprint)
}

/// Walk one ray with an Amanatides-Woo style traversal, inserting visited
/// cells until the ray is blocked, leaves the grid, or exceeds `range`.
fn march_ray(
    map: &GridMap,
    origin: Cell,
    dx: f64,
    dy: f64,
    range: f64,
    footprint: &mut BTreeSet<Cell>,
) {
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    // Starting from the cell center, the first gridline in each axis is half
    // a cell away.
    let (mut t_max_x, t_delta_x) = if dx.abs() < 1e-15 {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (0.5 / dx.abs(), 1.0 / dx.abs())
    };
    let (mut t_max_y, t_delta_y) = if dy.abs() < 1e-15 {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (0.5 / dy.abs(), 1.0 / dy.abs())
    };

    let mut x = origin.x as i64;
    let mut y = origin.y as i64;

    // Visit one cell: Some(true) = keep marching, Some(false) = ray ends.
    let visit = |map: &GridMap, footprint: &mut BTreeSet<Cell>, x: i64, y: i64| -> bool {
        if !map.in_bounds_i(x, y) {
            return false;
        }
        let cell = Cell::new(x as usize, y as usize);
        if cell.distance(origin) > range + RANGE_EPS {
            return false;
        }
        footprint.insert(cell);
        map.get(cell) == CellState::Free
    };

    loop {
        if t_max_x.min(t_max_y) > range + 1.0 {
            // No further cell center can lie within range.
            return;
        }
        if (t_max_x - t_max_y).abs() <= CORNER_EPS {
            // Exact corner crossing: both side cells are touched, then the
            // diagonal. An occupied side cell blocks the crack.
            if !visit(map, footprint, x + step_x, y) {
                return;
            }
            if !visit(map, footprint, x, y + step_y) {
                return;
            }
            x += step_x;
            y += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        } else if t_max_x < t_max_y {
            x += step_x;
            t_max_x += t_delta_x;
        } else {
            y += step_y;
            t_max_y += t_delta_y;
        }
        if !visit(map, footprint, x, y) {
            return;
        }
    }
}

/// Copy the state and feature of every footprint cell from `true_map` into a
/// new belief map; all other cells are unchanged.
pub fn update_belief(
    belief: &GridMap,
    true_map: &GridMap,
    footprint: &BTreeSet<Cell>,
) -> Result<GridMap, GridError> {
    if belief.width() != true_map.width() || belief.height() != true_map.height() {
        return Err(GridError::DimensionMismatch {
            w1: belief.width(),
            h1: belief.height(),
            w2: true_map.width(),
            h2: true_map.height(),
        });
    }
    let mut out = belief.clone();
    for &cell in footprint {
        out.set(cell, true_map.get(cell));
        out.set_feature(cell, true_map.feature(cell));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_map(w: usize, h: usize) -> GridMap {
        GridMap::filled(w, h, CellState::Free)
    }

    #[test]
    fn zero_range_sees_only_pose() {
        let m = free_map(5, 5);
        let fp = simulate_scan(&m, Pose::new(2, 2, 0.0), 0.0, 360).unwrap();
        assert_eq!(fp.len(), 1);
        assert!(fp.contains(&Cell::new(2, 2)));
    }

    #[test]
    fn open_map_within_range_is_fully_seen() {
        let m = free_map(7, 7);
        let fp = simulate_scan(&m, Pose::new(3, 3, 0.0), 10.0, 360).unwrap();
        assert_eq!(fp.len(), 49);
    }

    #[test]
    fn wall_occludes_cells_behind_it() {
        // 5x5, full-height wall in column 2, pose at (0, 2). Hand trace: the
        // straight ray reaches (2,2); slope +-1/2 rays reach (2,1) and (2,3);
        // nothing east of the wall is visible.
        let mut m = free_map(5, 5);
        for y in 0..5 {
            m.set(Cell::new(2, y), CellState::Occupied);
        }
        let fp = simulate_scan(&m, Pose::new(0, 2, 0.0), 10.0, 360).unwrap();
        for c in [Cell::new(2, 1), Cell::new(2, 2), Cell::new(2, 3)] {
            assert!(fp.contains(&c), "wall cell {c:?} should be seen");
        }
        assert!(
            fp.iter().all(|c| c.x < 3),
            "nothing behind the wall may be visible: {fp:?}"
        );
        // The entire open half is visible.
        for x in 0..2 {
            for y in 0..5 {
                assert!(fp.contains(&Cell::new(x, y)));
            }
        }
    }

    #[test]
    fn scan_rejects_bad_pose() {
        let mut m = free_map(3, 3);
        m.set(Cell::new(1, 1), CellState::Occupied);
        assert!(simulate_scan(&m, Pose::new(9, 0, 0.0), 5.0, 8).is_err());
        assert!(simulate_scan(&m, Pose::new(1, 1, 0.0), 5.0, 8).is_err());
    }

    #[test]
    fn unknown_cells_occlude_on_partial_maps() {
        // Replay scans into a partial map must not reveal anything behind
        // unknown space.
        let mut m = free_map(5, 1);
        m.set(Cell::new(2, 0), CellState::Unknown);
        let fp = simulate_scan(&m, Pose::new(0, 0, 0.0), 10.0, 16).unwrap();
        assert!(fp.contains(&Cell::new(2, 0)));
        assert!(!fp.contains(&Cell::new(3, 0)));
    }

    #[test]
    fn update_with_empty_footprint_is_identity() {
        let t = free_map(4, 4);
        let b = GridMap::unknown(4, 4);
        let out = update_belief(&b, &t, &BTreeSet::new()).unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn update_with_all_cells_reveals_everything() {
        let mut t = free_map(3, 3);
        t.set(Cell::new(1, 1), CellState::Occupied);
        t.set_feature(Cell::new(0, 0), 2);
        let b = GridMap::unknown(3, 3);
        let all: BTreeSet<Cell> = t.iter_cells().collect();
        let out = update_belief(&b, &t, &all).unwrap();
        assert_eq!(out, t);
    }

    #[test]
    fn update_single_cell() {
        let mut t = free_map(2, 2);
        t.set_feature(Cell::new(0, 0), 1);
        let b = GridMap::unknown(2, 2);
        let fp: BTreeSet<Cell> = [Cell::new(0, 0)].into_iter().collect();
        let out = update_belief(&b, &t, &fp).unwrap();
        assert_eq!(out.get(Cell::new(0, 0)), CellState::Free);
        assert_eq!(out.feature(Cell::new(0, 0)), 1);
        assert_eq!(out.count(CellState::Unknown), 3);
    }

    #[test]
    fn update_rejects_dimension_mismatch() {
        let t = free_map(3, 3);
        let b = GridMap::unknown(2, 3);
        assert!(update_belief(&b, &t, &BTreeSet::new()).is_err());
    }
}
