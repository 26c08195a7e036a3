//! Plain-text scene files.
//!
//! A scene is a TOML document with a frame tag, the boundary ring and any
//! number of obstacle rings. Vertices are `[x, y]` pairs in metres:
//!
//! ```toml
//! frame = "physical"
//! boundary = [[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0], [-2.0, 2.0]]
//!
//! [[obstacle]]
//! vertices = [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]
//! ```
//!
//! Rings may be given in either winding; they are stored counter-clockwise.
//! Loading validates the same invariants as [`SpaceMap::new`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EnvironmentError, SpaceKind, SpaceMap};
use crate::geometry::{Polygon, Vec2};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene syntax: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("scene serialization: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid scene: {0}")]
    Invalid(#[from] EnvironmentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    frame: SpaceKind,
    boundary: Vec<[f64; 2]>,
    #[serde(default, rename = "obstacle", skip_serializing_if = "Vec::is_empty")]
    obstacles: Vec<ObstacleEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleEntry {
    vertices: Vec<[f64; 2]>,
}

fn ring(points: &[[f64; 2]]) -> Result<Polygon, EnvironmentError> {
    let vs = points
        .iter()
        .map(|&[x, y]| Vec2::try_new(x, y))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Polygon::new(vs)?)
}

fn points(poly: &Polygon) -> Vec<[f64; 2]> {
    poly.vertices().iter().map(|v| [v.x, v.y]).collect()
}

pub fn parse_scene(text: &str) -> Result<SpaceMap, SceneError> {
    let file: SceneFile = toml::from_str(text)?;
    let boundary = ring(&file.boundary)?;
    let obstacles = file
        .obstacles
        .iter()
        .map(|o| ring(&o.vertices))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SpaceMap::new(boundary, obstacles, file.frame)?)
}

pub fn write_scene(space: &SpaceMap) -> Result<String, SceneError> {
    let file = SceneFile {
        frame: space.kind(),
        boundary: points(space.boundary()),
        obstacles: space
            .obstacles()
            .iter()
            .map(|o| ObstacleEntry {
                vertices: points(o),
            })
            .collect(),
    };
    Ok(toml::to_string(&file)?)
}

pub fn load_scene(path: &std::path::Path) -> Result<SpaceMap, SceneError> {
    parse_scene(&std::fs::read_to_string(path)?)
}
