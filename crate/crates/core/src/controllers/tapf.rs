use super::{overlay_future, steer_to_target, ControllerParams, SteeringDecision};
use crate::environment::SpaceMap;
use crate::geometry::Vec2;
use crate::predictor::Prediction;
use crate::redirection::{clamp_gains, UserState};

/// Maximum spacing of the edge samples that exert force.
pub const TAPF_SAMPLE_SPACING: f64 = 0.25;

/// Resultant repulsive force at `p` from every boundary and obstacle edge.
///
/// Each edge is cut into equal pieces no longer than [`TAPF_SAMPLE_SPACING`];
/// the midpoint of each piece pushes `p` away with strength `length / d²`.
pub fn compute_tapf_force(p: Vec2, physical: &SpaceMap) -> Vec2 {
    let mut force = Vec2::ZERO;
    for &(a, b) in physical.edges() {
        let len = a.distance(b);
        let n = (len / TAPF_SAMPLE_SPACING).ceil().max(1.0);
        let spacing = len / n;
        for i in 0..n as usize {
            let s = a.lerp(b, (i as f64 + 0.5) / n);
            let d = p - s;
            let d2 = d.length_squared();
            if d2 <= 1e-18 {
                continue;
            }
            force += d * (spacing / (d2 * d2.sqrt()));
        }
    }
    force
}

fn steer_along_force(
    u: &UserState,
    net: Vec2,
    d_theta: f64,
    params: &ControllerParams,
) -> SteeringDecision {
    let Some(dir) = net.normalized() else {
        let mut d = SteeringDecision::neutral();
        d.debug.force = Some(net);
        return d;
    };
    let mut decision = steer_to_target(u, dir, d_theta, params);
    // Walking against the push is slowed down physically, walking with it sped up.
    let along = u.physical_pose.forward().dot(net);
    decision.gains.translation = if along < 0.0 {
        params.limits.max_translation
    } else if along > 0.0 {
        params.limits.min_translation
    } else {
        1.0
    };
    decision.gains = clamp_gains(decision.gains, &params.limits);
    decision.debug.force = Some(net);
    decision
}

/// Potential-field steering along the resultant force at the walker.
pub fn tapf(
    u: &UserState,
    d_theta: f64,
    physical: &SpaceMap,
    params: &ControllerParams,
) -> SteeringDecision {
    let force_c = compute_tapf_force(u.physical_pose.position, physical);
    steer_along_force(u, force_c, d_theta, params)
}

/// Potential-field steering along the blend of the forces at the current and
/// forecast physical positions.
pub fn f_tapf(
    u: &UserState,
    pred: &Prediction,
    d_theta: f64,
    physical: &SpaceMap,
    params: &ControllerParams,
) -> SteeringDecision {
    let force_c = compute_tapf_force(u.physical_pose.position, physical);
    let future = overlay_future(u, pred, physical);
    let force_f = compute_tapf_force(future, physical);
    let net = force_f * params.mu + force_c * (1.0 - params.mu);
    let mut decision = steer_along_force(u, net, d_theta, params);
    decision.debug.future_physical = Some(future);
    decision
}
