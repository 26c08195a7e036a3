//! Redirection controllers.
//!
//! Each controller turns the walker's current state, plus an optional forecast,
//! into the gains for one frame. The forecast-fused variants blend quantities
//! computed at the current physical position with the same quantities computed
//! at the forecast position overlaid on the physical space.

mod arc;
mod mpc;
mod s2c;
mod tapf;

use std::fmt;
use std::str::FromStr;

pub use arc::{arc, compute_misalign, f_arc, ArcMemory, Misalignment};
pub use mpc::{
    f_mpcred, f_mpcred_exhaustive, mpc_stage_cost, mpcred, MpcAction, MpcParams, MpcSearch,
};
pub use s2c::{f_s2c, s2c};
pub use tapf::{compute_tapf_force, f_tapf, tapf, TAPF_SAMPLE_SPACING};

use crate::environment::SpaceMap;
use crate::geometry::{signed_angle, Vec2};
use crate::predictor::{DirectionProbs, Prediction};
use crate::redirection::{clamp_gains, GainLimits, Gains, UserState};

/// Values a controller computed on the way to its gains, kept for traces.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SteeringDebug {
    pub target_dir: Option<Vec2>,
    pub force: Option<Vec2>,
    pub misalignment: Option<f64>,
    pub future_misalignment: Option<f64>,
    pub future_physical: Option<Vec2>,
    pub mpc_action: Option<MpcAction>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringDecision {
    pub gains: Gains,
    pub debug: SteeringDebug,
}

impl SteeringDecision {
    pub fn neutral() -> Self {
        SteeringDecision {
            gains: Gains::IDENTITY,
            debug: SteeringDebug::default(),
        }
    }
}

/// Tunable constants shared by the controllers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerParams {
    /// Weight of the forecast-derived term, in [0, 1].
    pub mu: f64,
    pub limits: GainLimits,
    /// Angles to the steering target below this (radians) get no curvature.
    pub dead_zone: f64,
    /// Misalignment at which the alignment controller reaches full curvature.
    pub arc_saturation: f64,
    pub arc_range: f64,
    /// Floor on front distances in the alignment translation gain.
    pub arc_distance_floor: f64,
    /// Orient the forecast pose from current to future position (false flips it).
    pub arc_future_from_current: bool,
    pub mpc: MpcParams,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            mu: 0.0,
            limits: GainLimits::default(),
            dead_zone: 2f64.to_radians(),
            arc_saturation: 0.5,
            arc_range: 10.0,
            arc_distance_floor: 0.1,
            arc_future_from_current: true,
            mpc: MpcParams::default(),
        }
    }
}

impl ControllerParams {
    pub fn max_curvature(&self) -> f64 {
        1.0 / self.limits.min_curvature_radius
    }
}

/// Per-frame inputs a controller may read.
#[derive(Debug, Clone, Copy)]
pub struct FrameInput<'a> {
    pub user: &'a UserState,
    /// Virtual rotation commanded this frame (radians).
    pub d_theta: f64,
    pub prediction: Option<Prediction>,
    pub direction: Option<DirectionProbs>,
    pub physical: &'a SpaceMap,
    pub virtual_space: &'a SpaceMap,
}

/// Steers toward `target_dir` with maximum curvature.
///
/// The rotation gain enlarges the physical turn while the walker turns toward
/// the target and shrinks it while turning away.
pub fn steer_to_target(
    u: &UserState,
    target_dir: Vec2,
    d_theta: f64,
    params: &ControllerParams,
) -> SteeringDecision {
    let angle = signed_angle(u.physical_pose.forward(), target_dir);
    let outside_dead_zone = angle.abs() >= params.dead_zone;
    let mut gains = Gains::IDENTITY;
    if outside_dead_zone {
        gains.curvature_sign = if angle > 0.0 { 1 } else { -1 };
        gains.curvature_radius = params.limits.min_curvature_radius;
        if d_theta != 0.0 {
            gains.rotation = if d_theta * angle > 0.0 {
                params.limits.min_rotation
            } else {
                params.limits.max_rotation
            };
        }
    }
    SteeringDecision {
        gains: clamp_gains(gains, &params.limits),
        debug: SteeringDebug {
            target_dir: Some(target_dir),
            ..SteeringDebug::default()
        },
    }
}

/// Places the forecast virtual position on the physical space.
///
/// The predicted virtual displacement is rotated by the current heading offset
/// and added to the physical position; points closer than `body_radius` to a
/// wall are pushed back into the free space.
pub fn overlay_future(u: &UserState, pred: &Prediction, physical: &SpaceMap) -> Vec2 {
    let dv = pred.future_virtual_position - u.virtual_pose.position;
    let p = u.physical_pose.position + u.virtual_to_physical_displacement(dv);
    if physical.min_clearance(p) < u.body_radius {
        physical.project_into_free(p, u.body_radius)
    } else {
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ControllerKind {
    S2c,
    FS2c,
    Tapf,
    FTapf,
    Arc,
    FArc,
    MpcRed,
    FMpcRed,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 8] = [
        ControllerKind::S2c,
        ControllerKind::FS2c,
        ControllerKind::Tapf,
        ControllerKind::FTapf,
        ControllerKind::Arc,
        ControllerKind::FArc,
        ControllerKind::MpcRed,
        ControllerKind::FMpcRed,
    ];

    /// (vanilla, forecast) pairs in reporting order.
    pub const PAIRS: [(ControllerKind, ControllerKind); 4] = [
        (ControllerKind::MpcRed, ControllerKind::FMpcRed),
        (ControllerKind::S2c, ControllerKind::FS2c),
        (ControllerKind::Tapf, ControllerKind::FTapf),
        (ControllerKind::Arc, ControllerKind::FArc),
    ];

    pub fn id(self) -> &'static str {
        match self {
            ControllerKind::S2c => "s2c",
            ControllerKind::FS2c => "f-s2c",
            ControllerKind::Tapf => "tapf",
            ControllerKind::FTapf => "f-tapf",
            ControllerKind::Arc => "arc",
            ControllerKind::FArc => "f-arc",
            ControllerKind::MpcRed => "mpcred",
            ControllerKind::FMpcRed => "f-mpcred",
        }
    }

    pub fn is_forecast(self) -> bool {
        matches!(
            self,
            ControllerKind::FS2c
                | ControllerKind::FTapf
                | ControllerKind::FArc
                | ControllerKind::FMpcRed
        )
    }

    pub fn vanilla(self) -> ControllerKind {
        match self {
            ControllerKind::FS2c => ControllerKind::S2c,
            ControllerKind::FTapf => ControllerKind::Tapf,
            ControllerKind::FArc => ControllerKind::Arc,
            ControllerKind::FMpcRed => ControllerKind::MpcRed,
            k => k,
        }
    }

    pub fn forecast(self) -> ControllerKind {
        match self {
            ControllerKind::S2c => ControllerKind::FS2c,
            ControllerKind::Tapf => ControllerKind::FTapf,
            ControllerKind::Arc => ControllerKind::FArc,
            ControllerKind::MpcRed => ControllerKind::FMpcRed,
            k => k,
        }
    }

    /// Fusion weight used when none is configured.
    pub fn default_mu(self) -> f64 {
        match self {
            ControllerKind::FS2c => 0.5,
            ControllerKind::FTapf => 0.7,
            ControllerKind::FArc => 0.5,
            _ => 0.0,
        }
    }

    pub fn uses_position_forecast(self) -> bool {
        matches!(
            self,
            ControllerKind::FS2c | ControllerKind::FTapf | ControllerKind::FArc
        )
    }

    pub fn uses_direction_forecast(self) -> bool {
        self == ControllerKind::FMpcRed
    }

    pub fn is_mpc(self) -> bool {
        matches!(self, ControllerKind::MpcRed | ControllerKind::FMpcRed)
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ControllerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        ControllerKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| format!("unknown controller `{s}`"))
    }
}

/// A controller instance for one trial, with whatever memory it needs.
#[derive(Debug, Clone)]
pub struct Controller {
    kind: ControllerKind,
    params: ControllerParams,
    arc_memory: ArcMemory,
    mpc_action: Option<MpcAction>,
}

impl Controller {
    pub fn new(kind: ControllerKind, params: ControllerParams) -> Self {
        Controller {
            kind,
            params,
            arc_memory: ArcMemory::default(),
            mpc_action: None,
        }
    }

    pub fn kind(&self) -> ControllerKind {
        self.kind
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    /// Gains for this frame. `replan` asks the tree-search controllers to search
    /// again; otherwise they hold their last action.
    pub fn decide(&mut self, input: &FrameInput<'_>, replan: bool) -> SteeringDecision {
        let p = &self.params;
        let u = input.user;
        match self.kind {
            ControllerKind::S2c => s2c(u, input.d_theta, input.physical, p),
            ControllerKind::FS2c => match input.prediction {
                Some(pred) => f_s2c(u, &pred, input.d_theta, input.physical, p),
                None => s2c(u, input.d_theta, input.physical, p),
            },
            ControllerKind::Tapf => tapf(u, input.d_theta, input.physical, p),
            ControllerKind::FTapf => match input.prediction {
                Some(pred) => f_tapf(u, &pred, input.d_theta, input.physical, p),
                None => tapf(u, input.d_theta, input.physical, p),
            },
            ControllerKind::Arc => arc(
                u,
                input.d_theta,
                input.virtual_space,
                input.physical,
                p,
                &mut self.arc_memory,
            ),
            ControllerKind::FArc => match input.prediction {
                Some(pred) => f_arc(
                    u,
                    &pred,
                    input.d_theta,
                    input.virtual_space,
                    input.physical,
                    p,
                    &mut self.arc_memory,
                ),
                None => arc(
                    u,
                    input.d_theta,
                    input.virtual_space,
                    input.physical,
                    p,
                    &mut self.arc_memory,
                ),
            },
            ControllerKind::MpcRed | ControllerKind::FMpcRed => {
                if replan || self.mpc_action.is_none() {
                    let gamma = match (self.kind, input.direction) {
                        (ControllerKind::FMpcRed, Some(g)) => g,
                        _ => DirectionProbs::UNIFORM,
                    };
                    self.mpc_action = Some(f_mpcred(u, &gamma, input.physical, &p.mpc).action);
                }
                let action = self.mpc_action.expect("planned above");
                SteeringDecision {
                    gains: action.gains(&p.limits),
                    debug: SteeringDebug {
                        mpc_action: Some(action),
                        ..SteeringDebug::default()
                    },
                }
            }
        }
    }
}
