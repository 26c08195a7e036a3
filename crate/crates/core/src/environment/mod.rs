//! Physical and virtual spaces: the fixed rooms E1–E4, randomized virtual wall
//! layouts, collection targets, and the occupancy grid used for navigation.

mod generate;
mod navgrid;
pub mod scene;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    distance_point_to_edge, point_in_polygon, ray_edge_intersection, GeometryError, Polygon, Vec2,
    EPS,
};

pub use generate::{
    generate_virtual_space, spawn_target, VirtualSpaceParams, MAX_GENERATION_ATTEMPTS,
    MAX_TARGET_DRAWS,
};
pub use navgrid::{Cell, NavGrid};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvironmentError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("obstacle {0} is not strictly inside the boundary")]
    ObstacleOutsideBoundary(usize),
    #[error("obstacles {0} and {1} overlap")]
    ObstaclesOverlap(usize, usize),
    #[error("free space is not connected")]
    Disconnected,
    #[error("virtual space generation gave up after {0} attempts")]
    GenerationFailed(usize),
    #[error("no valid target found in {0} draws")]
    TargetUnavailable(usize),
    #[error("unknown experiment id `{0}` (expected e1, e2, e3 or e4)")]
    UnknownExperiment(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Physical,
    Virtual,
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceKind::Physical => f.write_str("physical"),
            SpaceKind::Virtual => f.write_str("virtual"),
        }
    }
}

/// A polygonal boundary with polygonal obstacles inside it.
///
/// Immutable once built; every query is a pure read.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceMap {
    boundary: Polygon,
    obstacles: Vec<Polygon>,
    kind: SpaceKind,
    edges: Vec<(Vec2, Vec2)>,
}

impl SpaceMap {
    /// Builds a space, checking containment, non-overlap and connectivity.
    pub fn new(
        boundary: Polygon,
        obstacles: Vec<Polygon>,
        kind: SpaceKind,
    ) -> Result<Self, EnvironmentError> {
        let space = Self::new_unchecked(boundary, obstacles, kind);
        space.validate()?;
        Ok(space)
    }

    pub(crate) fn new_unchecked(
        boundary: Polygon,
        obstacles: Vec<Polygon>,
        kind: SpaceKind,
    ) -> Self {
        let edges = boundary
            .edges()
            .chain(obstacles.iter().flat_map(|o| o.edges()))
            .collect();
        SpaceMap {
            boundary,
            obstacles,
            kind,
            edges,
        }
    }

    fn validate(&self) -> Result<(), EnvironmentError> {
        for (i, o) in self.obstacles.iter().enumerate() {
            let inside = o
                .vertices()
                .iter()
                .all(|v| point_in_polygon(*v, &self.boundary));
            if !inside || o.min_distance_to(&self.boundary) <= EPS {
                return Err(EnvironmentError::ObstacleOutsideBoundary(i));
            }
        }
        for i in 0..self.obstacles.len() {
            for j in (i + 1)..self.obstacles.len() {
                let (a, b) = (&self.obstacles[i], &self.obstacles[j]);
                let nested =
                    point_in_polygon(a.vertices()[0], b) || point_in_polygon(b.vertices()[0], a);
                if nested || a.min_distance_to(b) <= EPS {
                    return Err(EnvironmentError::ObstaclesOverlap(i, j));
                }
            }
        }
        let grid = NavGrid::build(self, NavGrid::DEFAULT_RESOLUTION, 0.0);
        if grid.free_cell_count() > 0 && grid.largest_component_size() != grid.free_cell_count() {
            return Err(EnvironmentError::Disconnected);
        }
        Ok(())
    }

    pub fn boundary(&self) -> &Polygon {
        &self.boundary
    }

    pub fn obstacles(&self) -> &[Polygon] {
        &self.obstacles
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    /// Boundary edges followed by every obstacle edge.
    pub fn edges(&self) -> &[(Vec2, Vec2)] {
        &self.edges
    }

    /// Centre of the boundary's bounding box (the origin for every built-in space).
    pub fn center(&self) -> Vec2 {
        let (lo, hi) = self.boundary.bounds();
        (lo + hi) * 0.5
    }

    /// Inside the boundary (inclusive) and not inside any obstacle (inclusive).
    pub fn is_free(&self, p: Vec2) -> bool {
        point_in_polygon(p, &self.boundary)
            && !self.obstacles.iter().any(|o| point_in_polygon(p, o))
    }

    /// Distance to the nearest boundary or obstacle edge; 0 outside the free space.
    pub fn min_clearance(&self, p: Vec2) -> f64 {
        let d = self
            .edges
            .iter()
            .map(|&(a, b)| distance_point_to_edge(p, a, b))
            .fold(f64::INFINITY, f64::min);
        if d <= EPS {
            return 0.0;
        }
        // d > EPS, so plain crossing tests are exact here.
        if !crosses_odd(p, &self.boundary) || self.obstacles.iter().any(|o| crosses_odd(p, o)) {
            return 0.0;
        }
        d
    }

    /// Distance to the nearest edge, without the inside test of [`SpaceMap::min_clearance`].
    pub(crate) fn edge_distance(&self, p: Vec2) -> f64 {
        self.edges
            .iter()
            .map(|&(a, b)| distance_point_to_edge(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Offsets from the nearest edge points to `p`, one per edge within `tol`
    /// of the minimum distance.
    pub(crate) fn nearest_normals(&self, p: Vec2, tol: f64) -> Vec<Vec2> {
        let offsets: Vec<Vec2> = self
            .edges
            .iter()
            .map(|&(a, b)| p - crate::geometry::closest_point_on_segment(p, a, b))
            .collect();
        let min = offsets
            .iter()
            .map(|o| o.length())
            .fold(f64::INFINITY, f64::min);
        offsets
            .into_iter()
            .filter(|o| o.length() <= min + tol)
            .collect()
    }

    /// Distance along unit `dir` to the first boundary or obstacle edge, capped at `max_range`.
    pub fn raycast(&self, origin: Vec2, dir: Vec2, max_range: f64) -> Result<f64, GeometryError> {
        if !self.is_free(origin)
            || self
                .obstacles
                .iter()
                .any(|o| o.distance_to_boundary(origin) <= EPS)
        {
            return Err(GeometryError::OutsideFreeSpace(origin.x, origin.y));
        }
        Ok(self.raycast_unchecked(origin, dir, max_range))
    }

    pub(crate) fn raycast_unchecked(&self, origin: Vec2, dir: Vec2, max_range: f64) -> f64 {
        self.edges
            .iter()
            .filter_map(|&(a, b)| ray_edge_intersection(origin, dir, a, b))
            .fold(max_range, f64::min)
    }

    /// Minimum distance from the closed segment `p`–`q` to any edge.
    pub fn segment_clearance(&self, p: Vec2, q: Vec2) -> f64 {
        self.edges
            .iter()
            .map(|&(a, b)| crate::geometry::segment_segment_distance(p, q, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// The same space reflected across the x-axis.
    pub fn mirrored_y(&self) -> SpaceMap {
        SpaceMap::new_unchecked(
            self.boundary.mirrored_y(),
            self.obstacles.iter().map(Polygon::mirrored_y).collect(),
            self.kind,
        )
    }

    /// The same space under a rigid motion (rotation about the origin, then translation).
    pub fn transformed(&self, angle: f64, offset: Vec2) -> SpaceMap {
        SpaceMap::new_unchecked(
            self.boundary.transformed(angle, offset),
            self.obstacles
                .iter()
                .map(|o| o.transformed(angle, offset))
                .collect(),
            self.kind,
        )
    }

    /// Moves `p` so it lies in the free space with at least `margin` clearance,
    /// projecting off the boundary and out of obstacles. Points already clear are unchanged.
    pub fn project_into_free(&self, p: Vec2, margin: f64) -> Vec2 {
        let mut q = p;
        for _ in 0..8 {
            let clearance = self.min_clearance(q);
            if clearance >= margin - EPS && clearance > 0.0 {
                return q;
            }
            let mut best: Option<(f64, Vec2, Vec2)> = None;
            let mut consider = |a: Vec2, b: Vec2, inward_normal: Vec2| {
                let c = crate::geometry::closest_point_on_segment(q, a, b);
                let d = q.distance(c);
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, c, inward_normal));
                }
            };
            if !crosses_odd(q, &self.boundary) || self.boundary.distance_to_boundary(q) < margin {
                for (a, b) in self.boundary.edges() {
                    let n = (b - a).perp().normalized().unwrap_or(Vec2::ZERO);
                    consider(a, b, n);
                }
            }
            for o in &self.obstacles {
                if point_in_polygon(q, o) || o.distance_to_boundary(q) < margin {
                    for (a, b) in o.edges() {
                        let n = -(b - a).perp().normalized().unwrap_or(Vec2::ZERO);
                        consider(a, b, n);
                    }
                }
            }
            match best {
                Some((_, c, n)) => q = c + n * (margin + 1e-6),
                None => return q,
            }
        }
        q
    }
}

fn crosses_odd(p: Vec2, poly: &Polygon) -> bool {
    let mut inside = false;
    for (a, b) in poly.edges() {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Free-function form of [`SpaceMap::raycast`].
pub fn raycast(
    origin: Vec2,
    dir: Vec2,
    space: &SpaceMap,
    max_range: f64,
) -> Result<f64, GeometryError> {
    space.raycast(origin, dir, max_range)
}

/// Free-function form of [`SpaceMap::min_clearance`].
pub fn min_clearance(p: Vec2, space: &SpaceMap) -> f64 {
    space.min_clearance(p)
}

/// The four physical rooms of the main simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Experiment {
    /// Empty 4 m × 4 m room.
    E1,
    /// Empty 10 m × 10 m room.
    E2,
    /// 10 m × 10 m room with one central 4 m × 4 m obstacle.
    E3,
    /// 10 m × 10 m room with four 2 m × 2 m obstacles at the quadrant centres.
    E4,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::E1,
        Experiment::E2,
        Experiment::E3,
        Experiment::E4,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::E1 => "e1",
            Experiment::E2 => "e2",
            Experiment::E3 => "e3",
            Experiment::E4 => "e4",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = EnvironmentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "e1" => Ok(Experiment::E1),
            "e2" => Ok(Experiment::E2),
            "e3" => Ok(Experiment::E3),
            "e4" => Ok(Experiment::E4),
            other => Err(EnvironmentError::UnknownExperiment(other.to_string())),
        }
    }
}

/// Builds the physical room for an experiment, centred at the origin.
pub fn build_physical_space(experiment: Experiment) -> SpaceMap {
    let (size, obstacles) = match experiment {
        Experiment::E1 => (4.0, vec![]),
        Experiment::E2 => (10.0, vec![]),
        Experiment::E3 => (10.0, vec![Polygon::rect(Vec2::ZERO, 4.0, 4.0)]),
        Experiment::E4 => (
            10.0,
            [(-2.5, -2.5), (2.5, -2.5), (2.5, 2.5), (-2.5, 2.5)]
                .iter()
                .map(|&(x, y)| Polygon::rect(Vec2::new(x, y), 2.0, 2.0))
                .collect(),
        ),
    };
    SpaceMap::new_unchecked(
        Polygon::rect(Vec2::ZERO, size, size),
        obstacles,
        SpaceKind::Physical,
    )
}

/// Collection target in the virtual frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub position: Vec2,
    pub radius: f64,
}
