use super::{overlay_future, steer_to_target, ControllerParams, SteeringDecision};
use crate::environment::SpaceMap;
use crate::predictor::Prediction;
use crate::redirection::UserState;

/// Steer-to-center.
pub fn s2c(
    u: &UserState,
    d_theta: f64,
    physical: &SpaceMap,
    params: &ControllerParams,
) -> SteeringDecision {
    let d_c = physical.center() - u.physical_pose.position;
    match d_c.normalized() {
        Some(dir) => steer_to_target(u, dir, d_theta, params),
        None => SteeringDecision::neutral(),
    }
}

/// Steer-to-center toward the blend of the centre directions seen from the
/// current and the forecast physical positions.
pub fn f_s2c(
    u: &UserState,
    pred: &Prediction,
    d_theta: f64,
    physical: &SpaceMap,
    params: &ControllerParams,
) -> SteeringDecision {
    let center = physical.center();
    let future = overlay_future(u, pred, physical);
    let d_c = center - u.physical_pose.position;
    let d_f = center - future;
    let r = d_f * params.mu + d_c * (1.0 - params.mu);
    let mut decision = match r.normalized() {
        Some(dir) => steer_to_target(u, dir, d_theta, params),
        None => SteeringDecision::neutral(),
    };
    decision.debug.future_physical = Some(future);
    decision
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controllers::tests::physical_user;
    use crate::environment::{build_physical_space, Experiment};
    use crate::geometry::Vec2;
    use crate::redirection::{Pose, WalkerParams};

    fn params(mu: f64) -> ControllerParams {
        ControllerParams {
            mu,
            ..ControllerParams::default()
        }
    }

    #[test]
    fn points_at_center() {
        let e1 = build_physical_space(Experiment::E1);
        let u = physical_user(Vec2::new(1.0, 1.0), 0.0);
        let d = s2c(&u, 0.0, &e1, &params(0.0));
        let dir = d.debug.target_dir.unwrap();
        let want = Vec2::new(-1.0, -1.0) / 2f64.sqrt();
        assert!(dir.distance(want) < 1e-12);
    }

    #[test]
    fn no_steering_at_center() {
        let e1 = build_physical_space(Experiment::E1);
        let u = physical_user(Vec2::ZERO, 0.3);
        assert_eq!(s2c(&u, 0.0, &e1, &params(0.0)).gains.curvature_sign, 0);
    }

    #[test]
    fn bends_away_from_near_wall() {
        let e1 = build_physical_space(Experiment::E1);
        // heading +y along the right wall: the centre is to the left
        let u = physical_user(Vec2::new(1.5, 0.0), std::f64::consts::FRAC_PI_2);
        assert_eq!(s2c(&u, 0.0, &e1, &params(0.0)).gains.curvature_sign, 1);
        // heading +x straight at the wall, centre slightly to the right-behind
        let u = physical_user(Vec2::new(1.5, 0.1), 0.0);
        let d = s2c(&u, 0.0, &e1, &params(0.0));
        assert_eq!(d.gains.curvature_sign, -1);
    }

    #[test]
    fn zero_weight_is_vanilla() {
        let e1 = build_physical_space(Experiment::E1);
        let u = physical_user(Vec2::new(0.7, -0.4), 1.1);
        let pred = Prediction {
            future_virtual_position: Vec2::new(0.9, 0.2),
            horizon: 1.0,
        };
        let f = f_s2c(&u, &pred, 0.02, &e1, &params(0.0));
        let v = s2c(&u, 0.02, &e1, &params(0.0));
        assert_eq!(f.gains, v.gains);
        assert_eq!(f.debug.target_dir, v.debug.target_dir);
    }

    #[test]
    fn full_weight_uses_future_only() {
        let e2 = build_physical_space(Experiment::E2);
        let u = UserState::new(
            Pose::new(Vec2::ZERO, 0.0),
            Pose::new(Vec2::new(0.0, 2.0), 0.0),
            &WalkerParams::default(),
        );
        // future overlaid at (1, 2) + (0, -2) = (1, 0)
        let pred = Prediction {
            future_virtual_position: Vec2::new(1.0, -2.0),
            horizon: 1.0,
        };
        let d = f_s2c(&u, &pred, 0.0, &e2, &params(1.0));
        assert!(d.debug.target_dir.unwrap().distance(Vec2::new(-1.0, 0.0)) < 1e-12);
    }

    #[test]
    fn blend_arithmetic() {
        let e2 = build_physical_space(Experiment::E2);
        // current at (-1, 0): d_c = (1, 0); future at (0, -1): d_f = (0, 1)
        let u = UserState::new(
            Pose::new(Vec2::ZERO, 0.0),
            Pose::new(Vec2::new(-1.0, 0.0), 0.0),
            &WalkerParams::default(),
        );
        let pred = Prediction {
            future_virtual_position: Vec2::new(1.0, -1.0),
            horizon: 1.0,
        };
        let d = f_s2c(&u, &pred, 0.0, &e2, &params(0.5));
        let want = Vec2::new(0.5, 0.5) / Vec2::new(0.5, 0.5).length();
        assert!(d.debug.target_dir.unwrap().distance(want) < 1e-12);
    }
}
