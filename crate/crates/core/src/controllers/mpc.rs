use crate::environment::SpaceMap;
use crate::geometry::Vec2;
use crate::predictor::{Direction, DirectionProbs};
use crate::redirection::{apply_redirection, execute_reset, GainLimits, Gains, Pose, UserState};

/// One of the fixed redirection actions the tree search chooses between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MpcAction {
    None,
    CurvatureLeft,
    CurvatureRight,
}

impl MpcAction {
    /// Search order; earlier actions win ties.
    pub const ORDER: [MpcAction; 3] = [
        MpcAction::None,
        MpcAction::CurvatureLeft,
        MpcAction::CurvatureRight,
    ];

    pub fn gains(self, limits: &GainLimits) -> Gains {
        let mut g = Gains::IDENTITY;
        match self {
            MpcAction::None => {}
            MpcAction::CurvatureLeft => {
                g.curvature_sign = 1;
                g.curvature_radius = limits.min_curvature_radius;
            }
            MpcAction::CurvatureRight => {
                g.curvature_sign = -1;
                g.curvature_radius = limits.min_curvature_radius;
            }
        }
        g
    }

    pub fn mirrored(self) -> MpcAction {
        match self {
            MpcAction::None => MpcAction::None,
            MpcAction::CurvatureLeft => MpcAction::CurvatureRight,
            MpcAction::CurvatureRight => MpcAction::CurvatureLeft,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcParams {
    /// Number of stages searched.
    pub depth: usize,
    /// Decay applied to each deeper stage.
    pub alpha: f64,
    /// Length of each hypothetical virtual path segment (m).
    pub segment_length: f64,
    /// Integration step along a segment (m).
    pub step: f64,
    pub reset_cost: f64,
    /// Clearance beyond which no proximity cost accrues (m).
    pub proximity_range: f64,
    pub curvature_cost: f64,
    /// Seconds between searches; the last action is held in between.
    pub replan_interval: f64,
    pub limits: GainLimits,
}

impl Default for MpcParams {
    fn default() -> Self {
        MpcParams {
            depth: 4,
            alpha: 0.8,
            segment_length: 1.0,
            step: 0.25,
            reset_cost: 1000.0,
            proximity_range: 1.0,
            curvature_cost: 0.1,
            replan_interval: 0.5,
            limits: GainLimits::default(),
        }
    }
}

/// Simulates `action` while the walker turns toward `dir` and walks one
/// segment, returning the successor state and the stage cost.
///
/// A reset along the way costs `reset_cost`, ends the segment, and leaves the
/// walker in its post-reset state.
pub fn apply_stage(
    action: MpcAction,
    u: &UserState,
    dir: Direction,
    physical: &SpaceMap,
    params: &MpcParams,
) -> (UserState, f64) {
    let gains = action.gains(&params.limits);
    let mut cost = if action == MpcAction::None {
        0.0
    } else {
        params.curvature_cost
    };
    let mut s = apply_redirection(u, 0.0, dir.turn(), &gains);
    let steps = (params.segment_length / params.step).round().max(1.0) as usize;
    let dv = params.segment_length / steps as f64;
    // Constant gains: each step turns the physical heading by the same angle,
    // so the forward vector is rotated incrementally instead of re-evaluated.
    let ds = dv / gains.translation;
    let turn = gains.curvature() * ds;
    let (sin, cos) = turn.sin_cos();
    let v_step = s.virtual_pose.forward() * dv;
    let mut fwd = s.physical_pose.forward();
    let (mut vp, mut pp) = (s.virtual_pose.position, s.physical_pose.position);
    let (v_heading, p_heading) = (s.virtual_pose.heading, s.physical_pose.heading);
    let mut reset = false;
    let mut taken = 0;
    for _ in 0..steps {
        fwd = Vec2::new(cos * fwd.x - sin * fwd.y, sin * fwd.x + cos * fwd.y);
        vp += v_step;
        pp += fwd * ds;
        taken += 1;
        // A step shorter than the body radius cannot cross an edge unnoticed.
        let clearance = physical.edge_distance(pp);
        if clearance <= s.body_radius {
            cost += params.reset_cost;
            reset = true;
            break;
        }
        cost += (1.0 - clearance / params.proximity_range).max(0.0) * dv;
    }
    s.virtual_pose = Pose::new(vp, v_heading);
    s.physical_pose = Pose::new(pp, p_heading + turn * taken as f64);
    if reset {
        if let Ok((after, _)) = execute_reset(&s, physical, 0.0, 0.0) {
            s = after;
        }
    }
    (s, cost)
}

/// Cost of one stage; see [`apply_stage`].
pub fn mpc_stage_cost(
    action: MpcAction,
    u: &UserState,
    dir: Direction,
    physical: &SpaceMap,
    params: &MpcParams,
) -> f64 {
    apply_stage(action, u, dir, physical, params).1
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpcSearch {
    pub action: MpcAction,
    pub cost: f64,
}

fn search(
    u: &UserState,
    gamma: &DirectionProbs,
    physical: &SpaceMap,
    params: &MpcParams,
    k: usize,
    prune: bool,
) -> MpcSearch {
    let mut best = MpcSearch {
        action: MpcAction::None,
        cost: f64::INFINITY,
    };
    for action in MpcAction::ORDER {
        // no action can cost less than nothing
        if prune && best.cost <= 0.0 {
            break;
        }
        let mut cost = 0.0;
        for dir in Direction::ALL {
            let (next, stage) = apply_stage(action, u, dir, physical, params);
            let w = gamma.get(dir);
            cost += w * stage;
            if prune && cost >= best.cost {
                break;
            }
            if k > 1 {
                let child = search(&next, gamma, physical, params, k - 1, prune);
                cost += params.alpha * w * child.cost;
            }
        }
        if cost < best.cost {
            best = MpcSearch { action, cost };
        }
    }
    best
}

/// Depth-limited expected-cost tree search with branch-and-bound.
///
/// Each stage tries every action against forward, left and right one-segment
/// hypotheses weighted by `gamma`; deeper stages are decayed by `alpha`.
pub fn f_mpcred(
    u: &UserState,
    gamma: &DirectionProbs,
    physical: &SpaceMap,
    params: &MpcParams,
) -> MpcSearch {
    search(u, gamma, physical, params, params.depth.max(1), true)
}

/// The same search without any pruning.
pub fn f_mpcred_exhaustive(
    u: &UserState,
    gamma: &DirectionProbs,
    physical: &SpaceMap,
    params: &MpcParams,
) -> MpcSearch {
    search(u, gamma, physical, params, params.depth.max(1), false)
}

/// Tree search under uniform direction probabilities.
pub fn mpcred(u: &UserState, physical: &SpaceMap, params: &MpcParams) -> MpcSearch {
    f_mpcred(u, &DirectionProbs::UNIFORM, physical, params)
}
