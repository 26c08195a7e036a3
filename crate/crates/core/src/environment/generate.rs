use std::f64::consts::PI;

use rand::Rng;

use super::{EnvironmentError, NavGrid, SpaceKind, SpaceMap, Target};
use crate::geometry::{Polygon, Vec2};

/// Upper bound on wall placement draws for one virtual space.
pub const MAX_GENERATION_ATTEMPTS: usize = 10_000;
/// Upper bound on candidate draws for one target.
pub const MAX_TARGET_DRAWS: usize = 10_000;

/// Shape of the randomized virtual scene: a square room with thin straight walls.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualSpaceParams {
    pub half_size: f64,
    pub min_walls: usize,
    pub max_walls: usize,
    pub wall_length: f64,
    pub wall_thickness: f64,
    /// Minimum gap between two walls and between a wall and the boundary.
    pub min_separation: f64,
    /// Disc radius the virtual walker plans with.
    pub nav_radius: f64,
    /// Fraction of free grid cells that must share one component.
    pub min_connected_fraction: f64,
    pub target_min_distance: f64,
    pub target_max_distance: f64,
    pub target_clearance: f64,
    pub target_radius: f64,
}

impl Default for VirtualSpaceParams {
    fn default() -> Self {
        VirtualSpaceParams {
            half_size: 10.0,
            min_walls: 10,
            max_walls: 15,
            wall_length: 4.0,
            wall_thickness: 0.1,
            min_separation: 0.6,
            nav_radius: 0.25,
            min_connected_fraction: 0.95,
            target_min_distance: 0.2,
            target_max_distance: 8.0,
            target_clearance: 0.3,
            target_radius: 0.2,
        }
    }
}

/// Draws a virtual room with 10–15 randomly placed walls.
///
/// Walls are rejection-sampled against the separation rule; a finished layout
/// whose navigable grid is too fragmented is discarded and drawn again. All
/// draws count against [`MAX_GENERATION_ATTEMPTS`].
pub fn generate_virtual_space<R: Rng + ?Sized>(
    rng: &mut R,
    params: &VirtualSpaceParams,
) -> Result<SpaceMap, EnvironmentError> {
    let h = params.half_size;
    let boundary = Polygon::rect(Vec2::ZERO, 2.0 * h, 2.0 * h);
    let mut attempts = 0;
    loop {
        let count = rng.gen_range(params.min_walls..=params.max_walls);
        let mut walls: Vec<Polygon> = Vec::with_capacity(count);
        while walls.len() < count {
            if attempts >= MAX_GENERATION_ATTEMPTS {
                return Err(EnvironmentError::GenerationFailed(attempts));
            }
            attempts += 1;
            let center = Vec2::new(rng.gen_range(-h..h), rng.gen_range(-h..h));
            let angle = rng.gen_range(0.0..PI);
            let wall =
                Polygon::oriented_rect(center, params.wall_length, params.wall_thickness, angle);
            let (lo, hi) = wall.bounds();
            let margin = params.min_separation;
            let inside = lo.x >= -h + margin
                && lo.y >= -h + margin
                && hi.x <= h - margin
                && hi.y <= h - margin;
            if inside && walls.iter().all(|w| w.min_distance_to(&wall) >= margin) {
                walls.push(wall);
            }
        }
        let space = SpaceMap::new_unchecked(boundary.clone(), walls, SpaceKind::Virtual);
        let grid = NavGrid::build(&space, NavGrid::DEFAULT_RESOLUTION, params.nav_radius);
        let free = grid.free_cell_count();
        if free > 0
            && grid.largest_component_size() as f64 >= params.min_connected_fraction * free as f64
        {
            return Ok(space);
        }
    }
}

/// Draws the next collection target around the walker.
///
/// The target lies 0.2–8 m from `agent_pos`, keeps the configured wall
/// clearance, and is reachable on `nav` from the walker's position.
pub fn spawn_target<R: Rng + ?Sized>(
    rng: &mut R,
    agent_pos: Vec2,
    space: &SpaceMap,
    nav: &NavGrid,
    params: &VirtualSpaceParams,
) -> Result<Target, EnvironmentError> {
    let home = nav
        .attach(space, agent_pos)
        .and_then(|c| nav.component_of(c));
    let (r0, r1) = (params.target_min_distance, params.target_max_distance);
    for _ in 0..MAX_TARGET_DRAWS {
        let r = rng.gen_range(r0 * r0..r1 * r1).sqrt();
        let theta = rng.gen_range(-PI..PI);
        let p = agent_pos + Vec2::from_angle(theta) * r;
        if space.min_clearance(p) < params.target_clearance.max(params.nav_radius) {
            continue;
        }
        let reachable = match (home, nav.attach(space, p).and_then(|c| nav.component_of(c))) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        };
        if reachable {
            return Ok(Target {
                position: p,
                radius: params.target_radius,
            });
        }
    }
    Err(EnvironmentError::TargetUnavailable(MAX_TARGET_DRAWS))
}
