use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{scenario_id, EnvFamily, EnvGenError, Scenario};
use crate::gridmap::{shortest_path_cost, Cell, CellState, GridMap, UnknownRule};

/// Office floor generation parameters.
///
/// Hallways form a jittered grid of 2-cell-wide strips, so the corridor
/// skeleton always contains cycles; rooms are carved into the blocks between
/// strips and attach to hallways through single-cell doorways (some rooms get
/// a second doorway, which is what makes shortcuts through unseen space
/// possible). A fraction of room cells become furniture-like clutter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OfficeParams {
    pub width: usize,
    pub height: usize,
    /// Horizontal hallway strips (at least 2).
    pub hall_rows: usize,
    /// Vertical hallway strips (at least 2).
    pub hall_cols: usize,
    pub hall_width: usize,
    /// Minimum room slice span, walls included.
    pub min_room_span: usize,
    /// Fraction of room interior cells turned into clutter.
    pub clutter_density: f64,
    /// Probability that a room receives a second doorway.
    pub second_door_prob: f64,
    pub min_rooms: usize,
}

impl Default for OfficeParams {
    fn default() -> Self {
        OfficeParams {
            width: 35,
            height: 35,
            hall_rows: 3,
            hall_cols: 3,
            hall_width: 2,
            min_room_span: 6,
            clutter_density: 0.10,
            second_door_prob: 0.7,
            min_rooms: 4,
        }
    }
}

const HALL_LABEL_BASE: u8 = 2;
const ROOM_LABEL_BASE: u8 = 3;

struct Room {
    interior: Vec<Cell>,
}

struct Layout {
    map: GridMap,
    hall: Vec<bool>,
    rooms: Vec<Room>,
}

/// Generate an office scenario. `OfficeBase` labels hallway cells 2 and room
/// cells (doorways included) 3; `OfficeDiff` swaps the two labels over an
/// identical floor plan for the same seed.
pub fn generate_office(
    family: EnvFamily,
    params: &OfficeParams,
    seed: u64,
) -> Result<Scenario, EnvGenError> {
    if family.is_maze() {
        return Err(EnvGenError::GenerationFailure(format!(
            "{family} is not an office family"
        )));
    }
    validate(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _attempt in 0..8 {
        let layout = match build(params, &mut rng) {
            Some(l) => l,
            None => continue,
        };
        if layout.rooms.len() < params.min_rooms {
            continue;
        }
        let start_room = rng.random_range(0..layout.rooms.len());
        let goal_room = loop {
            let r = rng.random_range(0..layout.rooms.len());
            if r != start_room {
                break r;
            }
        };
        let start = pick_cell(&layout.rooms[start_room], &mut rng);
        let goal = pick_cell(&layout.rooms[goal_room], &mut rng);
        let solvable = shortest_path_cost(&layout.map, start, goal, UnknownRule::Blocked)
            .map(|c| c.is_finite())
            .unwrap_or(false);
        if !solvable {
            continue;
        }

        let (hall_label, room_label) = match family {
            EnvFamily::OfficeBase => (HALL_LABEL_BASE, ROOM_LABEL_BASE),
            _ => (ROOM_LABEL_BASE, HALL_LABEL_BASE),
        };
        let mut map = layout.map;
        let w = map.width();
        for c in map.iter_cells().collect::<Vec<_>>() {
            if map.is_free(c) {
                let label = if layout.hall[c.y * w + c.x] {
                    hall_label
                } else {
                    room_label
                };
                map.set_feature(c, label);
            }
        }

        return Ok(Scenario {
            true_map: map,
            start,
            goal,
            family,
            seed,
            id: scenario_id(family, seed),
        });
    }
    Err(EnvGenError::GenerationFailure(
        "no valid office layout after bounded retries".into(),
    ))
}

fn validate(p: &OfficeParams) -> Result<(), EnvGenError> {
    if (p.hall_rows - 1) * (p.hall_cols - 1) < 2 {
        return Err(EnvGenError::GenerationFailure(
            "office needs at least 2 hallway loops".into(),
        ));
    }
    let min_h = 2 + p.hall_rows * p.hall_width + (p.hall_rows - 1) * 6;
    let min_w = 2 + p.hall_cols * p.hall_width + (p.hall_cols - 1) * p.min_room_span;
    if p.height < min_h || p.width < min_w {
        return Err(EnvGenError::GenerationFailure(format!(
            "office of {}x{} too small for {} x {} hallways",
            p.width, p.height, p.hall_rows, p.hall_cols
        )));
    }
    if !(0.0..1.0).contains(&p.clutter_density) || !(0.0..=1.0).contains(&p.second_door_prob) {
        return Err(EnvGenError::GenerationFailure(
            "clutter density and door probability must be fractions".into(),
        ));
    }
    Ok(())
}

fn pick_cell(room: &Room, rng: &mut ChaCha8Rng) -> Cell {
    room.interior[rng.random_range(0..room.interior.len())]
}

/// Evenly spaced strip origins with +-2 jitter on the interior strips; the
/// outer strips hug the map border so every block is hallway-bounded.
fn strip_positions(n: usize, extent: usize, width: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let last = extent - 1 - width;
    let mut pos = Vec::with_capacity(n);
    for i in 0..n {
        let ideal = 1.0 + (last as f64 - 1.0) * i as f64 / (n as f64 - 1.0);
        let mut p = ideal.round() as i64;
        if i > 0 && i + 1 < n {
            p += rng.random_range(-2..=2);
        }
        pos.push(p.clamp(1, last as i64) as usize);
    }
    // Keep blocks tall enough for rooms.
    for i in 1..n {
        let min = pos[i - 1] + width + 6;
        if pos[i] < min {
            pos[i] = min.min(last);
        }
    }
    pos
}

fn build(params: &OfficeParams, rng: &mut ChaCha8Rng) -> Option<Layout> {
    let (w, h, hw) = (params.width, params.height, params.hall_width);
    let mut map = GridMap::filled(w, h, CellState::Occupied);
    let mut hall = vec![false; w * h];

    let row_pos = strip_positions(params.hall_rows, h, hw, rng);
    let col_pos = strip_positions(params.hall_cols, w, hw, rng);

    for &ry in &row_pos {
        for y in ry..ry + hw {
            for x in 1..w - 1 {
                map.set(Cell::new(x, y), CellState::Free);
                hall[y * w + x] = true;
            }
        }
    }
    for &cx in &col_pos {
        for x in cx..cx + hw {
            for y in 1..h - 1 {
                map.set(Cell::new(x, y), CellState::Free);
                hall[y * w + x] = true;
            }
        }
    }

    let mut rooms = Vec::new();
    for gr in 0..params.hall_rows - 1 {
        let y0 = row_pos[gr] + hw;
        let y1 = row_pos[gr + 1].checked_sub(1)?;
        if y1 <= y0 + 3 {
            continue;
        }
        for gc in 0..params.hall_cols - 1 {
            let x0 = col_pos[gc] + hw;
            let x1 = col_pos[gc + 1].checked_sub(1)?;
            if x1 <= x0 + 3 {
                continue;
            }
            carve_block_rooms(params, &mut map, rng, (x0, x1, y0, y1), &mut rooms);
        }
    }
    Some(Layout { map, hall, rooms })
}

/// Split one block into vertical slices and carve a room in each.
fn carve_block_rooms(
    params: &OfficeParams,
    map: &mut GridMap,
    rng: &mut ChaCha8Rng,
    (x0, x1, y0, y1): (usize, usize, usize, usize),
    rooms: &mut Vec<Room>,
) {
    let span = params.min_room_span.max(4);
    let mut slices = Vec::new();
    let mut sx = x0;
    while x1 + 1 - sx >= span {
        let max_take = (x1 + 1 - sx).min(span + 3);
        let take = rng.random_range(span..=max_take);
        slices.push((sx, sx + take - 1));
        sx += take;
    }
    if slices.is_empty() {
        return;
    }
    if sx <= x1 {
        // Absorb the remainder into the last slice.
        slices.last_mut().expect("non-empty").1 = x1;
    }

    for (sx0, sx1) in slices {
        let interior: Vec<Cell> = (y0 + 1..y1)
            .flat_map(|y| (sx0 + 1..sx1).map(move |x| Cell::new(x, y)))
            .collect();
        if interior.is_empty() {
            continue;
        }
        for &c in &interior {
            map.set(c, CellState::Free);
        }
        let doors = punch_doors(params, map, rng, (sx0, sx1, y0, y1));
        if doors.is_empty() {
            // Re-seal a room that cannot reach a hallway.
            for &c in &interior {
                map.set(c, CellState::Occupied);
            }
            continue;
        }
        let interior = place_clutter(params, map, rng, interior, &doors);
        rooms.push(Room { interior });
    }
}

/// Candidate doorway cells per side, then one door (and sometimes a second
/// on a different side).
fn punch_doors(
    params: &OfficeParams,
    map: &mut GridMap,
    rng: &mut ChaCha8Rng,
    (sx0, sx1, y0, y1): (usize, usize, usize, usize),
) -> Vec<Cell> {
    let hall_free =
        |x: i64, y: i64| map.in_bounds_i(x, y) && map.is_free(Cell::new(x as usize, y as usize));
    let mut sides: Vec<Vec<Cell>> = Vec::new();
    let north: Vec<Cell> = (sx0 + 1..sx1)
        .filter(|&x| hall_free(x as i64, y0 as i64 - 1))
        .map(|x| Cell::new(x, y0))
        .collect();
    let south: Vec<Cell> = (sx0 + 1..sx1)
        .filter(|&x| hall_free(x as i64, y1 as i64 + 1))
        .map(|x| Cell::new(x, y1))
        .collect();
    let west: Vec<Cell> = (y0 + 1..y1)
        .filter(|&y| hall_free(sx0 as i64 - 1, y as i64))
        .map(|y| Cell::new(sx0, y))
        .collect();
    let east: Vec<Cell> = (y0 + 1..y1)
        .filter(|&y| hall_free(sx1 as i64 + 1, y as i64))
        .map(|y| Cell::new(sx1, y))
        .collect();
    for side in [north, south, west, east] {
        if !side.is_empty() {
            sides.push(side);
        }
    }
    if sides.is_empty() {
        return Vec::new();
    }

    let mut doors = Vec::new();
    let first_side = rng.random_range(0..sides.len());
    let first = sides[first_side][rng.random_range(0..sides[first_side].len())];
    map.set(first, CellState::Free);
    doors.push(first);

    if sides.len() > 1 && rng.random_bool(params.second_door_prob) {
        let mut other = rng.random_range(0..sides.len() - 1);
        if other >= first_side {
            other += 1;
        }
        let second = sides[other][rng.random_range(0..sides[other].len())];
        map.set(second, CellState::Free);
        doors.push(second);
    }
    doors
}

/// Occupy roughly `clutter_density` of the interior without disconnecting it
/// or walling off a doorway. Returns the remaining free interior cells.
fn place_clutter(
    params: &OfficeParams,
    map: &mut GridMap,
    rng: &mut ChaCha8Rng,
    interior: Vec<Cell>,
    doors: &[Cell],
) -> Vec<Cell> {
    let target = (interior.len() as f64 * params.clutter_density).floor() as usize;
    let mut placed = 0;
    let mut attempts = 0;
    while placed < target && attempts < 4 * target.max(1) {
        attempts += 1;
        let c = interior[rng.random_range(0..interior.len())];
        if !map.is_free(c) {
            continue;
        }
        let near_door = doors
            .iter()
            .any(|d| (d.x as i64 - c.x as i64).abs() <= 1 && (d.y as i64 - c.y as i64).abs() <= 1);
        if near_door {
            continue;
        }
        map.set(c, CellState::Occupied);
        if room_connected(map, &interior, doors) {
            placed += 1;
        } else {
            map.set(c, CellState::Free);
        }
    }
    interior.into_iter().filter(|&c| map.is_free(c)).collect()
}

/// All remaining free interior cells and all doors mutually 4-connected
/// within the room.
fn room_connected(map: &GridMap, interior: &[Cell], doors: &[Cell]) -> bool {
    let free: Vec<Cell> = interior
        .iter()
        .copied()
        .filter(|&c| map.is_free(c))
        .collect();
    let Some(&seed) = free.first() else {
        return false;
    };
    let inside = |c: Cell| free.contains(&c) || doors.contains(&c);
    let mut seen = vec![seed];
    let mut queue = VecDeque::from([seed]);
    while let Some(c) = queue.pop_front() {
        for n in map.neighbors4(c) {
            if map.is_free(n) && inside(n) && !seen.contains(&n) {
                seen.push(n);
                queue.push_back(n);
            }
        }
    }
    free.iter().all(|c| seen.contains(c)) && doors.iter().all(|d| seen.contains(d))
}
