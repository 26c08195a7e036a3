//! Gain kinematics: how virtual motion maps onto physical motion, the
//! perceptual threshold clamps, and the reset-to-center reorientation.

use std::f64::consts::PI;

use thiserror::Error;

use crate::environment::SpaceMap;
use crate::geometry::{normalize_angle, Vec2};

/// A position plus heading, in either frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec2,
    /// Radians in (−π, π].
    pub heading: f64,
}

impl Pose {
    pub fn new(position: Vec2, heading: f64) -> Self {
        Pose {
            position,
            heading: normalize_angle(heading),
        }
    }

    pub fn forward(&self) -> Vec2 {
        Vec2::from_angle(self.heading)
    }

    pub fn mirrored_y(&self) -> Pose {
        Pose::new(Vec2::new(self.position.x, -self.position.y), -self.heading)
    }
}

/// Kinematic constants of the simulated walker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkerParams {
    /// m/s
    pub linear_speed: f64,
    /// rad/s
    pub angular_speed: f64,
    /// Physical body radius used for the reset trigger.
    pub body_radius: f64,
}

impl Default for WalkerParams {
    fn default() -> Self {
        WalkerParams {
            linear_speed: 1.0,
            angular_speed: PI / 2.0,
            body_radius: 0.5,
        }
    }
}

/// Paired virtual and physical poses of the walker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserState {
    pub virtual_pose: Pose,
    pub physical_pose: Pose,
    pub linear_speed: f64,
    pub angular_speed: f64,
    pub body_radius: f64,
}

impl UserState {
    pub fn new(virtual_pose: Pose, physical_pose: Pose, walker: &WalkerParams) -> Self {
        UserState {
            virtual_pose,
            physical_pose,
            linear_speed: walker.linear_speed,
            angular_speed: walker.angular_speed,
            body_radius: walker.body_radius,
        }
    }

    /// Physical heading minus virtual heading.
    pub fn heading_offset(&self) -> f64 {
        normalize_angle(self.physical_pose.heading - self.virtual_pose.heading)
    }

    /// Maps a virtual-frame displacement onto the physical frame at the current alignment.
    pub fn virtual_to_physical_displacement(&self, dv: Vec2) -> Vec2 {
        dv.rotated(self.heading_offset())
    }

    pub fn mirrored_y(&self) -> UserState {
        UserState {
            virtual_pose: self.virtual_pose.mirrored_y(),
            physical_pose: self.physical_pose.mirrored_y(),
            ..*self
        }
    }
}

/// Perceptual detection thresholds for each gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainLimits {
    pub min_translation: f64,
    pub max_translation: f64,
    pub min_rotation: f64,
    pub max_rotation: f64,
    pub min_curvature_radius: f64,
}

impl Default for GainLimits {
    fn default() -> Self {
        GainLimits {
            min_translation: 0.86,
            max_translation: 1.26,
            min_rotation: 0.67,
            max_rotation: 1.24,
            min_curvature_radius: 7.5,
        }
    }
}

/// Redirection gains applied for one frame.
///
/// `translation` and `rotation` are virtual-over-physical ratios. Curvature
/// bends the physical path by `1 / curvature_radius` rad per physical metre,
/// toward the left for sign +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub translation: f64,
    pub rotation: f64,
    pub curvature_radius: f64,
    pub curvature_sign: i8,
}

impl Default for Gains {
    fn default() -> Self {
        Gains::IDENTITY
    }
}

impl Gains {
    pub const IDENTITY: Gains = Gains {
        translation: 1.0,
        rotation: 1.0,
        curvature_radius: f64::INFINITY,
        curvature_sign: 0,
    };

    /// Signed path curvature in rad/m (positive bends left).
    pub fn curvature(&self) -> f64 {
        if self.curvature_sign == 0 || self.curvature_radius.is_infinite() {
            0.0
        } else {
            f64::from(self.curvature_sign) / self.curvature_radius
        }
    }

    /// Sets sign and radius from a signed curvature.
    pub fn with_curvature(mut self, k: f64) -> Gains {
        if k == 0.0 || !k.is_finite() {
            self.curvature_sign = 0;
            self.curvature_radius = f64::INFINITY;
        } else {
            self.curvature_sign = if k > 0.0 { 1 } else { -1 };
            self.curvature_radius = 1.0 / k.abs();
        }
        self
    }

    pub fn within(&self, limits: &GainLimits) -> bool {
        (limits.min_translation..=limits.max_translation).contains(&self.translation)
            && (limits.min_rotation..=limits.max_rotation).contains(&self.rotation)
            && self.curvature_radius >= limits.min_curvature_radius
            && matches!(self.curvature_sign, -1..=1)
    }

    pub fn mirrored(&self) -> Gains {
        Gains {
            curvature_sign: -self.curvature_sign,
            ..*self
        }
    }
}

/// Clamps every gain into its threshold range; radii below the minimum are raised to it.
pub fn clamp_gains(g: Gains, limits: &GainLimits) -> Gains {
    let translation = g
        .translation
        .clamp(limits.min_translation, limits.max_translation);
    let rotation = g.rotation.clamp(limits.min_rotation, limits.max_rotation);
    let curvature_radius = if g.curvature_radius.is_nan() {
        f64::INFINITY
    } else {
        g.curvature_radius.max(limits.min_curvature_radius)
    };
    Gains {
        translation,
        rotation,
        curvature_radius,
        curvature_sign: g.curvature_sign.signum(),
    }
}

/// Advances both poses by one frame of virtual motion.
///
/// The virtual pose turns by `d_theta` and then walks `dv` along its new
/// heading. The physical pose turns by `d_theta / g_r` plus the curvature drift
/// accumulated over its arc length `dv / g_t`, then walks that arc length.
pub fn apply_redirection(u: &UserState, dv: f64, d_theta: f64, g: &Gains) -> UserState {
    let mut next = *u;
    let vh = u.virtual_pose.heading + d_theta;
    next.virtual_pose = Pose::new(u.virtual_pose.position + Vec2::from_angle(vh) * dv, vh);

    let ds = dv / g.translation;
    let ph = u.physical_pose.heading + d_theta / g.rotation + g.curvature() * ds;
    next.physical_pose = Pose::new(u.physical_pose.position + Vec2::from_angle(ph) * ds, ph);
    next
}

/// True when the walker's physical body touches a wall or obstacle.
pub fn check_reset(u: &UserState, physical: &SpaceMap) -> bool {
    physical.min_clearance(u.physical_pose.position) <= u.body_radius
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetEvent {
    pub time: f64,
    pub physical_position: Vec2,
    pub virtual_distance_at_event: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResetError {
    #[error("no free direction at physical position ({0:.3}, {1:.3})")]
    UnrecoverablePose(f64, f64),
}

/// Ray length used to score reset directions.
const RESET_PROBE_RANGE: f64 = 100.0;
/// The center ray must be clear for at least this far to be used.
const CENTER_RAY_MIN: f64 = 1.0;
const RESET_DIRECTIONS: usize = 72;
/// Edges this close to the nearest one also constrain the escape heading.
const ESCAPE_TOL: f64 = 1e-9;

/// Reset-to-center: turns the physical heading toward the room centre, or toward
/// the most open of 72 sampled directions when the centre is blocked nearby.
///
/// Only headings that increase clearance are eligible; otherwise the next frame
/// would trigger another reset.
///
/// The virtual pose is untouched; the turn takes no simulated time.
pub fn execute_reset(
    u: &UserState,
    physical: &SpaceMap,
    time: f64,
    virtual_distance: f64,
) -> Result<(UserState, ResetEvent), ResetError> {
    let p = u.physical_pose.position;
    let normals = physical.nearest_normals(p, ESCAPE_TOL);
    let escapes = |d: Vec2| normals.iter().all(|n| n.dot(d) > 0.0);
    let to_center = physical.center() - p;
    let center_heading = to_center
        .normalized()
        .filter(|d| {
            escapes(*d) && physical.raycast_unchecked(p, *d, RESET_PROBE_RANGE) >= CENTER_RAY_MIN
        })
        .map(Vec2::angle);

    let heading = match center_heading {
        Some(h) => h,
        None => {
            let mut best: Option<(f64, f64, f64)> = None; // (range, |turn|, heading)
            let sampled = (0..RESET_DIRECTIONS)
                .map(|k| normalize_angle(k as f64 * 2.0 * PI / RESET_DIRECTIONS as f64));
            let eligible: Vec<f64> = sampled
                .clone()
                .filter(|&h| escapes(Vec2::from_angle(h)))
                .collect();
            let candidates = if eligible.is_empty() {
                sampled.collect()
            } else {
                eligible
            };
            for h in candidates {
                let range = physical.raycast_unchecked(p, Vec2::from_angle(h), RESET_PROBE_RANGE);
                let turn = normalize_angle(h - u.physical_pose.heading).abs();
                let better = match best {
                    None => true,
                    Some((r, t, _)) => range > r + 1e-9 || ((range - r).abs() <= 1e-9 && turn < t),
                };
                if better {
                    best = Some((range, turn, h));
                }
            }
            let (range, _, h) = best.expect("at least one direction sampled");
            if range <= u.body_radius {
                return Err(ResetError::UnrecoverablePose(p.x, p.y));
            }
            h
        }
    };

    let mut next = *u;
    next.physical_pose = Pose::new(p, heading);
    Ok((
        next,
        ResetEvent {
            time,
            physical_position: p,
            virtual_distance_at_event: virtual_distance,
        },
    ))
}
