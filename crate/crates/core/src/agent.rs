//! The simulated walker: grid path planning in the virtual space and a
//! turn-then-walk locomotion policy.

use thiserror::Error;

use crate::environment::{NavGrid, SpaceMap, Target};
use crate::geometry::{signed_angle, Vec2};
use crate::redirection::{Pose, UserState};

/// Heading error (radians) below which the walker starts walking.
pub const ALIGN_TOLERANCE: f64 = 5.0 * std::f64::consts::PI / 180.0;

/// Extra clearance kept by pruned path segments. Walking off by up to
/// `ALIGN_TOLERANCE` drifts sideways by at most v·e²/(2ω), about 2.4 mm at the
/// default speeds.
pub const TRACKING_MARGIN: f64 = 0.01;

/// Positions closer than this count as the same point.
const ARRIVE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("target at ({0:.2}, {1:.2}) is unreachable")]
    Unreachable(f64, f64),
}

/// Waypoints from the walker's start to the target, plus the index of the
/// next waypoint still to be reached.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPath {
    pub waypoints: Vec<Vec2>,
    pub cursor: usize,
}

impl PlannedPath {
    pub fn goal(&self) -> Vec2 {
        *self.waypoints.last().expect("paths are never empty")
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    pub fn is_finished(&self) -> bool {
        self.cursor >= self.waypoints.len()
    }
}

/// One frame of virtual locomotion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotionCommand {
    /// Forward virtual displacement, metres.
    pub dv: f64,
    /// Virtual heading change, radians (positive turns left).
    pub d_theta: f64,
}

impl MotionCommand {
    pub const IDLE: MotionCommand = MotionCommand {
        dv: 0.0,
        d_theta: 0.0,
    };

    pub fn is_rotating(&self) -> bool {
        self.d_theta != 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentStep {
    pub command: MotionCommand,
    pub target_reached: bool,
}

/// Plans a collision-free polyline for a disc of radius `nav.radius()`.
///
/// Grid A* between the attached cells, then greedy line-of-sight pruning.
pub fn plan_virtual_path(
    from: Vec2,
    to: &Target,
    vspace: &SpaceMap,
    nav: &NavGrid,
) -> Result<PlannedPath, PlanError> {
    let goal = to.position;
    if from.distance(goal) <= ARRIVE_EPS {
        return Ok(PlannedPath {
            waypoints: vec![from],
            cursor: 1,
        });
    }
    let needed = |p: Vec2, q: Vec2| {
        (nav.radius() + TRACKING_MARGIN)
            .min(vspace.min_clearance(p))
            .min(vspace.min_clearance(q))
            - 1e-9
    };
    if vspace.segment_clearance(from, goal) >= needed(from, goal) {
        return Ok(PlannedPath {
            waypoints: vec![from, goal],
            cursor: 1,
        });
    }
    let unreachable = || PlanError::Unreachable(goal.x, goal.y);
    let start = nav.attach(vspace, from).ok_or_else(unreachable)?;
    let end = nav.attach(vspace, goal).ok_or_else(unreachable)?;
    let cells = nav.shortest_path(start, end).ok_or_else(unreachable)?;

    let mut raw = Vec::with_capacity(cells.len() + 2);
    raw.push(from);
    raw.extend(cells);
    raw.push(goal);

    let mut waypoints = vec![from];
    let mut i = 0;
    while i < raw.len() - 1 {
        let mut j = raw.len() - 1;
        while j > i + 1 && vspace.segment_clearance(raw[i], raw[j]) < needed(raw[i], raw[j]) {
            j -= 1;
        }
        waypoints.push(raw[j]);
        i = j;
    }
    Ok(PlannedPath {
        waypoints,
        cursor: 1,
    })
}

/// Next frame of the turn-then-walk policy.
///
/// The walker turns in place at `angular_speed` until the next waypoint is
/// within 5° of its heading, then walks at `linear_speed` while trimming the
/// remaining heading error.
pub fn step_agent(path: &mut PlannedPath, u: &UserState, target: &Target, dt: f64) -> AgentStep {
    let pose = u.virtual_pose;
    if pose.position.distance(target.position) <= target.radius {
        return AgentStep {
            command: MotionCommand::IDLE,
            target_reached: true,
        };
    }
    while !path.is_finished() && path.waypoints[path.cursor].distance(pose.position) <= ARRIVE_EPS {
        path.cursor += 1;
    }
    if path.is_finished() {
        return AgentStep {
            command: MotionCommand::IDLE,
            target_reached: false,
        };
    }
    let to_wp = path.waypoints[path.cursor] - pose.position;
    let bearing = signed_angle(pose.forward(), to_wp);
    let max_turn = u.angular_speed * dt;
    let d_theta = bearing.clamp(-max_turn, max_turn);
    let mut dv = 0.0;
    if bearing.abs() <= ALIGN_TOLERANCE {
        let dist = to_wp.length();
        let stride = u.linear_speed * dt;
        if dist <= stride {
            dv = dist;
            path.cursor += 1;
        } else {
            dv = stride;
        }
    }
    AgentStep {
        command: MotionCommand { dv, d_theta },
        target_reached: false,
    }
}

/// Continuous-time state of the walker along a plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rollout {
    pub pose: Pose,
    pub cursor: usize,
}

/// Advances the idealized turn-then-walk policy along `path` for `horizon`
/// seconds: exact turns at `angular_speed`, then straight legs at `linear_speed`.
pub fn rollout(
    path: &PlannedPath,
    start: Rollout,
    linear_speed: f64,
    angular_speed: f64,
    horizon: f64,
) -> Rollout {
    let mut pos = start.pose.position;
    let mut heading = start.pose.heading;
    let mut cursor = start.cursor;
    let mut remaining = horizon.max(0.0);
    while cursor < path.waypoints.len() {
        let wp = path.waypoints[cursor];
        let to_wp = wp - pos;
        let dist = to_wp.length();
        if dist <= ARRIVE_EPS {
            cursor += 1;
            continue;
        }
        let bearing = signed_angle(Vec2::from_angle(heading), to_wp);
        let turn_time = bearing.abs() / angular_speed;
        if remaining < turn_time {
            heading += bearing.signum() * angular_speed * remaining;
            return Rollout {
                pose: Pose::new(pos, heading),
                cursor,
            };
        }
        remaining -= turn_time;
        heading = to_wp.angle();
        let walk_time = dist / linear_speed;
        if remaining < walk_time {
            pos += to_wp * (remaining / walk_time);
            return Rollout {
                pose: Pose::new(pos, heading),
                cursor,
            };
        }
        remaining -= walk_time;
        pos = wp;
        cursor += 1;
    }
    Rollout {
        pose: Pose::new(pos, heading),
        cursor,
    }
}

/// Virtual position the walker reaches after `horizon` seconds of following the plan.
pub fn future_point_on_plan(path: &PlannedPath, u: &UserState, horizon: f64) -> Vec2 {
    let start = Rollout {
        pose: u.virtual_pose,
        cursor: path.cursor,
    };
    rollout(path, start, u.linear_speed, u.angular_speed, horizon)
        .pose
        .position
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{SpaceKind, SpaceMap};
    use crate::geometry::Polygon;
    use crate::redirection::WalkerParams;
    use std::f64::consts::PI;

    fn empty_room() -> SpaceMap {
        SpaceMap::new(
            Polygon::rect(Vec2::ZERO, 20.0, 20.0),
            vec![],
            SpaceKind::Virtual,
        )
        .unwrap()
    }

    fn walled_room() -> SpaceMap {
        let wall = Polygon::oriented_rect(Vec2::new(1.5, 0.0), 4.0, 0.1, PI / 2.0);
        SpaceMap::new(
            Polygon::rect(Vec2::ZERO, 20.0, 20.0),
            vec![wall],
            SpaceKind::Virtual,
        )
        .unwrap()
    }

    fn target(x: f64, y: f64) -> Target {
        Target {
            position: Vec2::new(x, y),
            radius: 0.2,
        }
    }

    fn user(pos: Vec2, heading: f64) -> UserState {
        UserState::new(
            Pose::new(pos, heading),
            Pose::new(Vec2::ZERO, 0.0),
            &WalkerParams::default(),
        )
    }

    #[test]
    fn straight_line_when_visible() {
        let s = empty_room();
        let nav = NavGrid::build(&s, 0.25, 0.25);
        let p = plan_virtual_path(Vec2::ZERO, &target(3.0, 0.0), &s, &nav).unwrap();
        assert_eq!(p.waypoints, vec![Vec2::ZERO, Vec2::new(3.0, 0.0)]);
    }

    #[test]
    fn same_point_is_single_waypoint() {
        let s = empty_room();
        let nav = NavGrid::build(&s, 0.25, 0.25);
        let p = plan_virtual_path(Vec2::new(1.0, 1.0), &target(1.0, 1.0), &s, &nav).unwrap();
        assert_eq!(p.waypoints.len(), 1);
        assert_eq!(p.length(), 0.0);
    }

    #[test]
    fn detours_around_wall() {
        let s = walled_room();
        let nav = NavGrid::build(&s, 0.25, 0.25);
        let from = Vec2::new(0.0, 0.0);
        let to = target(3.0, 0.0);
        let p = plan_virtual_path(from, &to, &s, &nav).unwrap();
        assert!(p.length() > 3.0);
        for w in p.waypoints.windows(2) {
            assert!(s.segment_clearance(w[0], w[1]) >= 0.25 - 1e-9);
        }
        // the raw grid route is an upper bound once the end legs are added
        let grid = nav
            .shortest_path(
                nav.attach(&s, from).unwrap(),
                nav.attach(&s, to.position).unwrap(),
            )
            .unwrap();
        let grid_len: f64 = grid.windows(2).map(|w| w[0].distance(w[1])).sum::<f64>()
            + from.distance(grid[0])
            + to.position.distance(*grid.last().unwrap());
        assert!(p.length() <= grid_len + 1e-9);
        assert_eq!(p.goal(), to.position);
    }

    #[test]
    fn aligned_walks_one_stride() {
        let mut path = PlannedPath {
            waypoints: vec![Vec2::ZERO, Vec2::new(2.0, 0.0)],
            cursor: 1,
        };
        let u = user(Vec2::ZERO, 0.0);
        let s = step_agent(&mut path, &u, &target(2.0, 0.0), 1.0 / 60.0);
        assert!((s.command.dv - 1.0 / 60.0).abs() < 1e-15);
        assert_eq!(s.command.d_theta, 0.0);
    }

    #[test]
    fn turns_in_place_before_walking() {
        let mut path = PlannedPath {
            waypoints: vec![Vec2::ZERO, Vec2::new(0.0, 2.0)],
            cursor: 1,
        };
        let u = user(Vec2::ZERO, 0.0);
        let s = step_agent(&mut path, &u, &target(0.0, 2.0), 1.0 / 60.0);
        assert_eq!(s.command.dv, 0.0);
        assert!((s.command.d_theta - PI / 2.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn reached_target_idles() {
        let mut path = PlannedPath {
            waypoints: vec![Vec2::ZERO, Vec2::new(1.0, 0.0)],
            cursor: 1,
        };
        let u = user(Vec2::new(0.9, 0.0), 0.0);
        let s = step_agent(&mut path, &u, &target(1.0, 0.0), 1.0 / 60.0);
        assert!(s.target_reached);
        assert_eq!(s.command, MotionCommand::IDLE);
    }

    #[test]
    fn future_point_examples() {
        let path = PlannedPath {
            waypoints: vec![Vec2::ZERO, Vec2::new(10.0, 0.0)],
            cursor: 1,
        };
        let u = user(Vec2::ZERO, 0.0);
        assert_eq!(future_point_on_plan(&path, &u, 0.0), Vec2::ZERO);
        assert!((future_point_on_plan(&path, &u, 1.0) - Vec2::new(1.0, 0.0)).length() < 1e-12);
        assert!((future_point_on_plan(&path, &u, 100.0) - Vec2::new(10.0, 0.0)).length() < 1e-12);

        let left = PlannedPath {
            waypoints: vec![Vec2::ZERO, Vec2::new(0.0, 5.0)],
            cursor: 1,
        };
        // a quarter turn at π/2 rad/s takes exactly the whole second
        assert!(future_point_on_plan(&left, &u, 1.0).length() < 1e-9);
        assert!((future_point_on_plan(&left, &u, 1.5) - Vec2::new(0.0, 0.5)).length() < 1e-9);
    }
}
