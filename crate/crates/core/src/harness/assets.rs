//! Shipped maps, reference data and the random map generator.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::grid::{load_map, GridError, GridMap, MapParseError};
use crate::qlearn::{stream_rng, RngStream};

use super::config::MapSource;

pub const S10: &str = include_str!("../../assets/maps/s10.map");
pub const S20: &str = include_str!("../../assets/maps/s20.map");
pub const S30: &str = include_str!("../../assets/maps/s30.map");

/// Published result tables, one CSV row per table row. Percentages of the
/// comparison table are stored one row per map size.
pub const REFERENCE_CSV: &str = include_str!("../../assets/paper_reference.csv");

#[derive(Debug, Error)]
pub enum MapLoadError {
    #[error("unknown builtin map {0:?} (expected s10, s20 or s30)")]
    UnknownBuiltin(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: String, source: MapParseError },
    #[error("{0}: goal is not reachable from start")]
    Unreachable(String),
}

pub fn builtin_map_text(name: &str) -> Option<&'static str> {
    match name {
        "s10" => Some(S10),
        "s20" => Some(S20),
        "s30" => Some(S30),
        _ => None,
    }
}

/// Loads and checks a map: it must parse and its goal must be reachable.
pub fn load_map_source(source: &MapSource) -> Result<GridMap, MapLoadError> {
    let (text, name) = match source {
        MapSource::Builtin(name) => (
            builtin_map_text(name)
                .ok_or_else(|| MapLoadError::UnknownBuiltin(name.clone()))?
                .to_string(),
            format!("builtin:{name}"),
        ),
        MapSource::File(path) => (
            std::fs::read_to_string(path).map_err(|source| MapLoadError::Io {
                path: path.clone(),
                source,
            })?,
            path.display().to_string(),
        ),
    };
    let map = load_map(&text).map_err(|source| MapLoadError::Parse {
        path: name.clone(),
        source,
    })?;
    if !map.goal_reachable() {
        return Err(MapLoadError::Unreachable(name));
    }
    Ok(map)
}

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("grid must be at least 2 cells, got {h}x{v}")]
    TooSmall { h: usize, v: usize },
    #[error("density must lie in [0, 1), got {0}")]
    Density(f64),
    #[error("no reachable layout found in {0} attempts")]
    NoReachableLayout(usize),
    #[error(transparent)]
    Grid(#[from] GridError),
}

const GENERATE_ATTEMPTS: usize = 1000;

/// Random map with start 1, goal `h*v` and `round(density * (h*v - 2))`
/// obstacles placed uniformly among the other cells. Layouts whose goal is
/// unreachable are redrawn.
pub fn generate_map(h: usize, v: usize, density: f64, seed: u64) -> Result<GridMap, GenerateError> {
    if h * v < 2 {
        return Err(GenerateError::TooSmall { h, v });
    }
    if !(0.0..1.0).contains(&density) {
        return Err(GenerateError::Density(density));
    }
    let n = h * v;
    let count = (density * (n - 2) as f64).round() as usize;
    let mut rng = stream_rng(seed, RngStream::MapLayout);
    let mut free: Vec<usize> = (1..n - 1).collect();
    for _ in 0..GENERATE_ATTEMPTS {
        free.shuffle(&mut rng);
        let mut obstacles = vec![false; n];
        for &i in &free[..count] {
            obstacles[i] = true;
        }
        let map = GridMap::new(h, v, obstacles, 1, n)?;
        if map.goal_reachable() {
            return Ok(map);
        }
    }
    Err(GenerateError::NoReachableLayout(GENERATE_ATTEMPTS))
}
