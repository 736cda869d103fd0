use std::collections::VecDeque;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{scenario_id, EnvFamily, EnvGenError, Scenario};
use crate::gridmap::{Cell, CellState, GridMap};

/// Label planted on marked corridor cells.
const MARKER: u8 = 1;

/// Generate a perfect maze scenario.
///
/// The corridor graph is carved with a seeded recursive backtracker over a
/// logical lattice (grid cells at odd coordinates, passages between them), so
/// free space forms a tree: the maze is simply connected and the start-goal
/// corridor is unique. Start and goal are sampled from distinct dead ends at
/// least half the map diagonal apart.
///
/// Feature channel per family:
/// - `MazeGreen`: cells on the start-goal corridor carry the marker.
/// - `MazeGray`: every free cell carries the marker except the start-goal
///   corridor (inverted semantics).
/// - `MazeRandom`: the marker traces a corridor walk of comparable length
///   between two random dead ends, unrelated to the goal.
pub fn generate_maze(
    family: EnvFamily,
    size: (usize, usize),
    seed: u64,
) -> Result<Scenario, EnvGenError> {
    let (w, h) = size;
    if w < 7 || h < 7 || w % 2 == 0 || h % 2 == 0 {
        return Err(EnvGenError::GenerationFailure(format!(
            "maze size must be odd and at least 7x7, got {w}x{h}"
        )));
    }
    if !family.is_maze() {
        return Err(EnvGenError::GenerationFailure(format!(
            "{family} is not a maze family"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let map = carve_maze(w, h, &mut rng);

    let dead_ends = find_dead_ends(&map, w, h);
    let (start, goal) = pick_start_goal(&dead_ends, w, h, &mut rng)?;
    let goal_path = unique_path(&map, start, goal);

    let mut map = map;
    match family {
        EnvFamily::MazeGreen => {
            for &c in &goal_path {
                map.set_feature(c, MARKER);
            }
        }
        EnvFamily::MazeGray => {
            for c in map.iter_cells().collect::<Vec<_>>() {
                if map.is_free(c) {
                    map.set_feature(c, MARKER);
                }
            }
            for &c in &goal_path {
                map.set_feature(c, 0);
            }
        }
        EnvFamily::MazeRandom => {
            let walk = random_walk(&map, goal_path.len(), &mut rng);
            for &c in &walk {
                map.set_feature(c, MARKER);
            }
        }
        _ => unreachable!(),
    }

    Ok(Scenario {
        true_map: map,
        start,
        goal,
        family,
        seed,
        id: scenario_id(family, seed),
    })
}

/// Recursive backtracker over the logical lattice; returns a grid where
/// corridor cells are `Free` and everything else `Occupied`.
fn carve_maze(w: usize, h: usize, rng: &mut ChaCha8Rng) -> GridMap {
    let (mw, mh) = ((w - 1) / 2, (h - 1) / 2);
    let mut map = GridMap::filled(w, h, CellState::Occupied);
    let mut visited = vec![false; mw * mh];

    let start = (rng.random_range(0..mw), rng.random_range(0..mh));
    visited[start.1 * mw + start.0] = true;
    map.set(Cell::new(2 * start.0 + 1, 2 * start.1 + 1), CellState::Free);
    let mut stack = vec![start];

    while let Some(&(cx, cy)) = stack.last() {
        let mut next: Vec<(usize, usize)> = Vec::with_capacity(4);
        for (dx, dy) in [(0i64, -1i64), (-1, 0), (1, 0), (0, 1)] {
            let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
            if nx >= 0 && ny >= 0 && (nx as usize) < mw && (ny as usize) < mh {
                let (nx, ny) = (nx as usize, ny as usize);
                if !visited[ny * mw + nx] {
                    next.push((nx, ny));
                }
            }
        }
        if next.is_empty() {
            stack.pop();
            continue;
        }
        let &(nx, ny) = next.choose(rng).expect("non-empty");
        visited[ny * mw + nx] = true;
        // Open the passage midpoint and the neighbor cell.
        let wall = Cell::new(cx + nx + 1, cy + ny + 1);
        map.set(wall, CellState::Free);
        map.set(Cell::new(2 * nx + 1, 2 * ny + 1), CellState::Free);
        stack.push((nx, ny));
    }
    map
}

/// Logical corridor cells with exactly one open passage.
fn find_dead_ends(map: &GridMap, w: usize, h: usize) -> Vec<Cell> {
    let mut out = Vec::new();
    for y in (1..h).step_by(2) {
        for x in (1..w).step_by(2) {
            let c = Cell::new(x, y);
            let open = map.neighbors4(c).filter(|&n| map.is_free(n)).count();
            if open == 1 {
                out.push(c);
            }
        }
    }
    out
}

fn pick_start_goal(
    dead_ends: &[Cell],
    w: usize,
    h: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Cell, Cell), EnvGenError> {
    let min_sep = 0.5 * ((w * w + h * h) as f64).sqrt();
    let mut shuffled = dead_ends.to_vec();
    shuffled.shuffle(rng);
    for i in 0..shuffled.len() {
        for j in (i + 1)..shuffled.len() {
            if shuffled[i].distance(shuffled[j]) >= min_sep {
                return Ok((shuffled[i], shuffled[j]));
            }
        }
    }
    Err(EnvGenError::GenerationFailure(format!(
        "no dead-end pair separated by {min_sep:.1} cells"
    )))
}

/// The unique corridor path between two free cells of a tree maze, found by
/// 4-connected breadth-first search.
fn unique_path(map: &GridMap, from: Cell, to: Cell) -> Vec<Cell> {
    let w = map.width();
    let mut parent: Vec<Option<Cell>> = vec![None; w * map.height()];
    let mut seen = vec![false; w * map.height()];
    let mut queue = VecDeque::from([from]);
    seen[from.y * w + from.x] = true;
    while let Some(c) = queue.pop_front() {
        if c == to {
            break;
        }
        for n in map.neighbors4(c) {
            let ni = n.y * w + n.x;
            if map.is_free(n) && !seen[ni] {
                seen[ni] = true;
                parent[ni] = Some(c);
                queue.push_back(n);
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while let Some(p) = parent[cur.y * w + cur.x] {
        path.push(p);
        cur = p;
    }
    path.reverse();
    debug_assert_eq!(path[0], from, "maze must connect all corridor cells");
    path
}

/// A diffusive corridor walk of `target_len` steps from a random free cell.
///
/// A plain random walk (backtracking allowed) stays local, so where the
/// marker lands carries no information about the goal route; a shortest
/// path between distant cells would be biased toward high-traffic central
/// corridors and accidentally correlate with goal paths.
fn random_walk(map: &GridMap, target_len: usize, rng: &mut ChaCha8Rng) -> Vec<Cell> {
    let free: Vec<Cell> = map.iter_cells().filter(|&c| map.is_free(c)).collect();
    if free.is_empty() {
        return Vec::new();
    }
    let mut here = free[rng.random_range(0..free.len())];
    let mut visited = vec![here];
    for _ in 0..target_len {
        let next: Vec<Cell> = map.neighbors4(here).filter(|&n| map.is_free(n)).collect();
        if next.is_empty() {
            break;
        }
        here = next[rng.random_range(0..next.len())];
        if !visited.contains(&here) {
            visited.push(here);
        }
    }
    visited
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::{shortest_path_cost, UnknownRule};

    fn corridor_cells(map: &GridMap) -> Vec<Cell> {
        map.iter_cells().filter(|&c| map.is_free(c)).collect()
    }

    /// Edges of the 4-connected free-cell graph.
    fn corridor_edges(map: &GridMap) -> usize {
        let mut edges = 0;
        for c in corridor_cells(map) {
            for n in map.neighbors4(c) {
                if map.is_free(n) && n.row_major_key() > c.row_major_key() {
                    edges += 1;
                }
            }
        }
        edges
    }

    #[test]
    fn perfect_maze_corridor_graph_is_a_tree() {
        for seed in 0..5 {
            let s = generate_maze(EnvFamily::MazeGreen, (17, 17), seed).unwrap();
            let cells = corridor_cells(&s.true_map).len();
            assert_eq!(corridor_edges(&s.true_map), cells - 1);
        }
    }

    #[test]
    fn green_marks_exactly_the_goal_corridor() {
        let s = generate_maze(EnvFamily::MazeGreen, (21, 21), 7).unwrap();
        let path = unique_path(&s.true_map, s.start, s.goal);
        for &c in &path {
            assert_eq!(s.true_map.feature(c), MARKER);
        }
        // And the path found by the cost machinery stays on marked cells.
        let cost = shortest_path_cost(&s.true_map, s.start, s.goal, UnknownRule::Blocked).unwrap();
        assert!(cost.is_finite());
    }

    #[test]
    fn gray_inverts_the_marking() {
        let s = generate_maze(EnvFamily::MazeGray, (21, 21), 7).unwrap();
        let path = unique_path(&s.true_map, s.start, s.goal);
        for &c in &path {
            assert_eq!(s.true_map.feature(c), 0);
        }
        let marked = s
            .true_map
            .iter_cells()
            .filter(|&c| s.true_map.is_free(c) && s.true_map.feature(c) == MARKER)
            .count();
        let free = corridor_cells(&s.true_map).len();
        assert_eq!(marked, free - path.len());
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let a = generate_maze(EnvFamily::MazeRandom, (21, 21), 99).unwrap();
        let b = generate_maze(EnvFamily::MazeRandom, (21, 21), 99).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
    }

    #[test]
    fn families_share_structure_for_a_seed() {
        let g = generate_maze(EnvFamily::MazeGreen, (21, 21), 4).unwrap();
        let r = generate_maze(EnvFamily::MazeGray, (21, 21), 4).unwrap();
        assert_eq!(g.true_map.encode_cells(), r.true_map.encode_cells());
        assert_eq!(g.start, r.start);
        assert_eq!(g.goal, r.goal);
    }

    #[test]
    fn start_and_goal_are_separated_dead_ends() {
        let s = generate_maze(EnvFamily::MazeGreen, (25, 25), 3).unwrap();
        assert_ne!(s.start, s.goal);
        assert!(s.true_map.is_free(s.start));
        assert!(s.true_map.is_free(s.goal));
        assert!(s.start.distance(s.goal) >= 0.5 * (2.0f64 * 25.0 * 25.0).sqrt());
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(generate_maze(EnvFamily::MazeGreen, (6, 7), 0).is_err());
        assert!(generate_maze(EnvFamily::MazeGreen, (7, 5), 0).is_err());
    }

    #[test]
    fn removing_any_interior_path_cell_disconnects() {
        let s = generate_maze(EnvFamily::MazeGreen, (17, 17), 11).unwrap();
        let path = unique_path(&s.true_map, s.start, s.goal);
        for &c in &path[1..path.len() - 1] {
            let mut cut = s.true_map.clone();
            cut.set(c, CellState::Occupied);
            let cost = shortest_path_cost(&cut, s.start, s.goal, UnknownRule::Blocked).unwrap();
            assert!(cost.is_infinite(), "cutting {c:?} must disconnect");
        }
    }
}
