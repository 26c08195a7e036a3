use std::f64::consts::FRAC_PI_2;

use super::{overlay_future, ControllerParams, SteeringDebug, SteeringDecision};
use crate::environment::SpaceMap;
use crate::geometry::{signed_angle, Vec2};
use crate::predictor::Prediction;
use crate::redirection::{clamp_gains, Gains, Pose, UserState};

/// Front, left and right wall distances in both spaces and their total mismatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Misalignment {
    pub ml: f64,
    /// front, left, right
    pub virtual_dists: [f64; 3],
    pub physical_dists: [f64; 3],
}

/// Previous-frame misalignment, carried between frames.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArcMemory {
    pub prev_ml: Option<f64>,
}

fn probe(space: &SpaceMap, pose: &Pose, range: f64) -> [f64; 3] {
    [0.0, FRAC_PI_2, -FRAC_PI_2].map(|turn| {
        space
            .raycast(pose.position, Vec2::from_angle(pose.heading + turn), range)
            .unwrap_or(0.0)
    })
}

pub fn compute_misalign(
    v_pose: &Pose,
    p_pose: &Pose,
    vspace: &SpaceMap,
    pspace: &SpaceMap,
    range: f64,
) -> Misalignment {
    let v = probe(vspace, v_pose, range);
    let p = probe(pspace, p_pose, range);
    Misalignment {
        ml: (p[0] - v[0]).abs() + (p[1] - v[1]).abs() + (p[2] - v[2]).abs(),
        virtual_dists: v,
        physical_dists: p,
    }
}

/// Translation gain and signed curvature that reduce a given misalignment.
fn alignment_gains(m: &Misalignment, params: &ControllerParams) -> (f64, f64) {
    let floor = params.arc_distance_floor;
    let g_t = (m.virtual_dists[0].max(floor) / m.physical_dists[0].max(floor))
        .clamp(params.limits.min_translation, params.limits.max_translation);
    let left = (m.physical_dists[1] - m.virtual_dists[1]).abs();
    let right = (m.physical_dists[2] - m.virtual_dists[2]).abs();
    let side = if left < right {
        1.0
    } else if right < left {
        -1.0
    } else {
        0.0
    };
    let k = side * params.max_curvature() * (m.ml / params.arc_saturation).min(1.0);
    (g_t, k)
}

fn finish(
    g_t: f64,
    k: f64,
    g_r: f64,
    debug: SteeringDebug,
    params: &ControllerParams,
) -> SteeringDecision {
    let gains = Gains {
        translation: g_t,
        rotation: g_r,
        ..Gains::IDENTITY
    }
    .with_curvature(k);
    SteeringDecision {
        gains: clamp_gains(gains, &params.limits),
        debug,
    }
}

/// Alignment-based redirection using only the current frame.
///
/// The rotation gain enlarges physical turns while the misalignment shrinks
/// from one frame to the next and damps them while it grows.
pub fn arc(
    u: &UserState,
    d_theta: f64,
    vspace: &SpaceMap,
    pspace: &SpaceMap,
    params: &ControllerParams,
    memory: &mut ArcMemory,
) -> SteeringDecision {
    let m = compute_misalign(
        &u.virtual_pose,
        &u.physical_pose,
        vspace,
        pspace,
        params.arc_range,
    );
    let (g_t, k) = alignment_gains(&m, params);
    let g_r = match memory.prev_ml {
        Some(prev) if d_theta != 0.0 => {
            if m.ml < prev {
                params.limits.min_rotation
            } else {
                params.limits.max_rotation
            }
        }
        _ => 1.0,
    };
    memory.prev_ml = Some(m.ml);
    let debug = SteeringDebug {
        misalignment: Some(m.ml),
        ..SteeringDebug::default()
    };
    finish(g_t, k, g_r, debug, params)
}

/// Enlarges the physical turn when it heads toward a better-aligned forecast
/// (or away from a worse one), damps it otherwise.
fn future_rotation_gain(
    toward_future: bool,
    ml_c: f64,
    ml_f: f64,
    params: &ControllerParams,
) -> f64 {
    if toward_future == (ml_c > ml_f) {
        params.limits.min_rotation
    } else {
        params.limits.max_rotation
    }
}

/// Alignment-based redirection blending the gains computed at the current
/// poses and at the forecast poses.
pub fn f_arc(
    u: &UserState,
    pred: &Prediction,
    d_theta: f64,
    vspace: &SpaceMap,
    pspace: &SpaceMap,
    params: &ControllerParams,
    memory: &mut ArcMemory,
) -> SteeringDecision {
    let m_c = compute_misalign(
        &u.virtual_pose,
        &u.physical_pose,
        vspace,
        pspace,
        params.arc_range,
    );
    let (g_t_c, k_c) = alignment_gains(&m_c, params);

    let future_p = overlay_future(u, pred, pspace);
    let future_v = vspace.project_into_free(pred.future_virtual_position, 0.05);
    let step = pred.future_virtual_position - u.virtual_pose.position;
    let o_v = match step.normalized() {
        Some(d) if params.arc_future_from_current => d.angle(),
        Some(d) => (-d).angle(),
        None => u.virtual_pose.heading,
    };
    let o_p = o_v + u.heading_offset();
    let m_f = compute_misalign(
        &Pose::new(future_v, o_v),
        &Pose::new(future_p, o_p),
        vspace,
        pspace,
        params.arc_range,
    );
    let (g_t_f, k_f) = alignment_gains(&m_f, params);

    let mu = params.mu;
    let g_t = g_t_f * mu + g_t_c * (1.0 - mu);
    let k = k_f * mu + k_c * (1.0 - mu);

    let g_r = if d_theta == 0.0 {
        1.0
    } else {
        let to_future = future_p - u.physical_pose.position;
        let toward = d_theta * signed_angle(u.physical_pose.forward(), to_future) > 0.0;
        future_rotation_gain(toward, m_c.ml, m_f.ml, params)
    };
    memory.prev_ml = Some(m_c.ml);
    let debug = SteeringDebug {
        misalignment: Some(m_c.ml),
        future_misalignment: Some(m_f.ml),
        future_physical: Some(future_p),
        ..SteeringDebug::default()
    };
    finish(g_t, k, g_r, debug, params)
}
