//! Procedural generation of the evaluation environment families.
//!
//! Two world shapes are provided: perfect mazes (simply connected corridor
//! trees) and office floors (looped hallway grids with rooms hanging off
//! them). Each shape comes in feature-label variants that plant a marker
//! channel which is helpful, misleading, or uninformative about where the
//! goal lies, so that differently-biased estimators genuinely differ in
//! navigation cost. Generation is fully seeded: the same family, parameters,
//! and seed reproduce a byte-identical scenario file.

mod maze;
mod office;

pub use maze::generate_maze;
pub use office::{generate_office, OfficeParams};

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmap::{Cell, GridMap};

#[derive(Debug, Error)]
pub enum EnvGenError {
    #[error("generation failure: {0}")]
    GenerationFailure(String),
    #[error("unknown environment family '{0}'")]
    UnknownFamily(String),
    #[error("malformed scenario file: {0}")]
    MalformedFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The five environment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvFamily {
    /// Marker labels the unique start-goal corridor: a helpful signal.
    MazeGreen,
    /// Marker semantics inverted: the goal corridor is the unmarked one.
    MazeGray,
    /// Marker laid along a random corridor walk: uninformative.
    MazeRandom,
    /// Hallways labeled 2, rooms labeled 3.
    OfficeBase,
    /// Hallway and room labels swapped relative to [`EnvFamily::OfficeBase`].
    OfficeDiff,
}

impl EnvFamily {
    pub const ALL: [EnvFamily; 5] = [
        EnvFamily::MazeGreen,
        EnvFamily::MazeGray,
        EnvFamily::MazeRandom,
        EnvFamily::OfficeBase,
        EnvFamily::OfficeDiff,
    ];

    pub fn slug(&self) -> &'static str {
        match self {
            EnvFamily::MazeGreen => "maze_green",
            EnvFamily::MazeGray => "maze_gray",
            EnvFamily::MazeRandom => "maze_random",
            EnvFamily::OfficeBase => "office_base",
            EnvFamily::OfficeDiff => "office_diff",
        }
    }

    pub fn from_slug(s: &str) -> Result<Self, EnvGenError> {
        Self::ALL
            .into_iter()
            .find(|f| f.slug() == s)
            .ok_or_else(|| EnvGenError::UnknownFamily(s.to_string()))
    }

    pub fn is_maze(&self) -> bool {
        matches!(
            self,
            EnvFamily::MazeGreen | EnvFamily::MazeGray | EnvFamily::MazeRandom
        )
    }
}

impl fmt::Display for EnvFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// Generation parameters for all families.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvParams {
    /// Maze grid size (odd width, odd height).
    pub maze_size: (usize, usize),
    pub office: OfficeParams,
}

impl Default for EnvParams {
    fn default() -> Self {
        EnvParams {
            maze_size: (17, 17),
            office: OfficeParams::default(),
        }
    }
}

/// One navigation trial's world: a fully specified map, a start, and a goal.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub true_map: GridMap,
    pub start: Cell,
    pub goal: Cell,
    pub family: EnvFamily,
    pub seed: u64,
    pub id: String,
}

pub(crate) fn scenario_id(family: EnvFamily, seed: u64) -> String {
    format!("{}-{:016x}", family.slug(), seed)
}

/// Generate one scenario of the given family.
pub fn generate(family: EnvFamily, params: &EnvParams, seed: u64) -> Result<Scenario, EnvGenError> {
    if family.is_maze() {
        generate_maze(family, params.maze_size, seed)
    } else {
        generate_office(family, &params.office, seed)
    }
}

/// On-disk scenario schema. Cells are one row-major character each
/// ('U'/'F'/'O'); `y` increases downward.
#[derive(Debug, Serialize, Deserialize)]
struct ScenarioJson {
    width: usize,
    height: usize,
    cells: String,
    features: Vec<u8>,
    start: [usize; 2],
    goal: [usize; 2],
    family: String,
    seed: u64,
}

impl Scenario {
    pub fn to_json_string(&self) -> String {
        let json = ScenarioJson {
            width: self.true_map.width(),
            height: self.true_map.height(),
            cells: self.true_map.encode_cells(),
            features: self.true_map.features_vec().to_vec(),
            start: [self.start.x, self.start.y],
            goal: [self.goal.x, self.goal.y],
            family: self.family.slug().to_string(),
            seed: self.seed,
        };
        serde_json::to_string(&json).expect("scenario serialization cannot fail")
    }

    pub fn from_json_str(id: &str, s: &str) -> Result<Self, EnvGenError> {
        let json: ScenarioJson = serde_json::from_str(s)?;
        let cells = GridMap::decode_cells(&json.cells)
            .ok_or_else(|| EnvGenError::MalformedFile("bad cell character".into()))?;
        let map = GridMap::from_parts(json.width, json.height, cells, json.features)
            .map_err(|e| EnvGenError::MalformedFile(e.to_string()))?;
        Ok(Scenario {
            true_map: map,
            start: Cell::new(json.start[0], json.start[1]),
            goal: Cell::new(json.goal[0], json.goal[1]),
            family: EnvFamily::from_slug(&json.family)?,
            seed: json.seed,
            id: id.to_string(),
        })
    }

    /// Write `<dir>/<id>.json` and return the path.
    pub fn save_to(&self, dir: &Path) -> Result<PathBuf, EnvGenError> {
        let path = dir.join(format!("{}.json", self.id));
        fs::write(&path, self.to_json_string())?;
        Ok(path)
    }
}

/// Load one scenario file; the id is the file stem.
pub fn load_scenario(path: &Path) -> Result<Scenario, EnvGenError> {
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| EnvGenError::MalformedFile(format!("bad path {}", path.display())))?;
    Scenario::from_json_str(id, &fs::read_to_string(path)?)
}

/// Load every `.json` scenario in a directory, sorted by id.
pub fn load_scenario_dir(dir: &Path) -> Result<Vec<Scenario>, EnvGenError> {
    let mut scenarios = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("json")
            && path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n != "manifest.json")
        {
            scenarios.push(load_scenario(&path)?);
        }
    }
    scenarios.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(scenarios)
}

/// Manifest written by the `gen-envs` command next to the scenario files.
#[derive(Debug, Serialize, Deserialize)]
pub struct EnvManifest {
    pub family: String,
    pub seeds: Vec<u64>,
    pub files: Vec<String>,
}
