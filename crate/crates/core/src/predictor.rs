//! Sources of future information for the forecast-fused controllers.
//!
//! The oracle reads the walker's own plan and corrupts it with a displacement
//! error whose magnitude follows a zero-truncated normal distribution
//! calibrated to a target mean and standard deviation. A constant-velocity
//! extrapolator serves as a plan-free baseline, and a three-way direction
//! classifier emulates the forward/left/right output used by the tree search.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::erf::erfc;

use crate::agent::{future_point_on_plan, PlannedPath};
use crate::environment::SpaceMap;
use crate::geometry::{closest_point_on_segment, signed_angle, Vec2};
use crate::redirection::UserState;

/// A forecast of the walker's virtual position `horizon` seconds ahead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub future_virtual_position: Vec2,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Forward, Direction::Left, Direction::Right];

    /// Heading change (radians) of the hypothesis in the virtual frame.
    pub fn turn(self) -> f64 {
        match self {
            Direction::Forward => 0.0,
            Direction::Left => PI / 2.0,
            Direction::Right => -PI / 2.0,
        }
    }

    /// Bins a relative bearing into 90° sectors around forward, left and right.
    pub fn from_bearing(bearing: f64) -> Direction {
        if bearing.abs() <= FRAC_PI_4 {
            Direction::Forward
        } else if bearing > 0.0 {
            Direction::Left
        } else {
            Direction::Right
        }
    }
}

/// Probability of walking forward, left or right next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionProbs {
    pub forward: f64,
    pub left: f64,
    pub right: f64,
}

impl DirectionProbs {
    pub const UNIFORM: DirectionProbs = DirectionProbs {
        forward: 1.0 / 3.0,
        left: 1.0 / 3.0,
        right: 1.0 / 3.0,
    };

    /// `confidence` on `reported`, the rest split evenly.
    pub fn polarized(reported: Direction, confidence: f64) -> Self {
        let rest = (1.0 - confidence) / 2.0;
        let mut p = DirectionProbs {
            forward: rest,
            left: rest,
            right: rest,
        };
        *p.get_mut(reported) = confidence;
        p
    }

    pub fn get(&self, d: Direction) -> f64 {
        match d {
            Direction::Forward => self.forward,
            Direction::Left => self.left,
            Direction::Right => self.right,
        }
    }

    fn get_mut(&mut self, d: Direction) -> &mut f64 {
        match d {
            Direction::Forward => &mut self.forward,
            Direction::Left => &mut self.left,
            Direction::Right => &mut self.right,
        }
    }

    /// The most likely direction (forward, then left, on ties).
    pub fn argmax(&self) -> Direction {
        let mut best = Direction::Forward;
        for d in [Direction::Left, Direction::Right] {
            if self.get(d) > self.get(best) {
                best = d;
            }
        }
        best
    }

    pub fn sum(&self) -> f64 {
        self.forward + self.left + self.right
    }
}

/// Target moments of the displacement-error magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub mde_mean: f64,
    pub mde_sd: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel {
        mde_mean: 0.0,
        mde_sd: 0.0,
    };

    /// Parent normal `(loc, scale)` whose zero-truncation has these moments.
    ///
    /// Zero-truncated normals cover coefficients of variation in (0, 1); a
    /// target outside that range falls back to the untruncated parent.
    pub fn truncated_parent(&self) -> (f64, f64) {
        let (mean, sd) = (self.mde_mean, self.mde_sd);
        if mean <= 0.0 || sd <= 0.0 {
            return (mean.max(0.0), 0.0);
        }
        let cv = sd / mean;
        if !(0.1..1.0).contains(&cv) {
            return (mean, sd);
        }
        // CV of the truncated distribution rises monotonically with the
        // standardized truncation point a = -loc/scale.
        let (mut lo, mut hi) = (-10.0, 30.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if truncated_cv(mid) < cv {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = 0.5 * (lo + hi);
        let lambda = inverse_mills(a);
        let scale = mean / (lambda - a);
        (-a * scale, scale)
    }
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// φ(a) / (1 − Φ(a))
fn inverse_mills(a: f64) -> f64 {
    std_normal_pdf(a) / (0.5 * erfc(a / std::f64::consts::SQRT_2))
}

fn truncated_cv(a: f64) -> f64 {
    let l = inverse_mills(a);
    (1.0 + a * l - l * l).max(0.0).sqrt() / (l - a)
}

/// Sampler for error magnitudes; built once per trial.
#[derive(Debug, Clone, Copy)]
pub struct ErrorSampler {
    parent: Option<Normal<f64>>,
    constant: f64,
}

impl ErrorSampler {
    pub fn new(noise: &NoiseModel) -> Self {
        let (loc, scale) = noise.truncated_parent();
        if scale > 0.0 {
            ErrorSampler {
                parent: Some(Normal::new(loc, scale).expect("finite positive scale")),
                constant: 0.0,
            }
        } else {
            ErrorSampler {
                parent: None,
                constant: loc,
            }
        }
    }

    pub fn magnitude<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.parent {
            None => self.constant,
            Some(n) => loop {
                let x = n.sample(rng);
                if x >= 0.0 {
                    return x;
                }
            },
        }
    }

    /// Error vector with sampled magnitude and uniform direction.
    pub fn error<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        let m = self.magnitude(rng);
        if m == 0.0 {
            return Vec2::ZERO;
        }
        Vec2::from_angle(rng.gen_range(-PI..PI)) * m
    }
}

/// Keeps `p` inside the boundary polygon of `space`, nudged `eps` inward if it was outside.
pub fn clamp_to_boundary(p: Vec2, space: &SpaceMap, eps: f64) -> Vec2 {
    let b = space.boundary();
    if b.contains(p) && b.distance_to_boundary(p) >= eps {
        return p;
    }
    let mut best = (f64::INFINITY, p, Vec2::ZERO);
    for (a, c) in b.edges() {
        let q = closest_point_on_segment(p, a, c);
        let d = q.distance(p);
        if d < best.0 {
            best = (d, q, (c - a).perp().normalized().unwrap_or(Vec2::ZERO));
        }
    }
    if b.contains(p) && best.0 >= eps {
        return p;
    }
    best.1 + best.2 * eps
}

const CLAMP_EPS: f64 = 1e-6;

/// Plan-reading oracle: the true future point displaced by calibrated noise.
pub fn predict_position_oracle<R: Rng + ?Sized>(
    path: &PlannedPath,
    u: &UserState,
    horizon: f64,
    sampler: &ErrorSampler,
    vspace: &SpaceMap,
    rng: &mut R,
) -> Prediction {
    let truth = future_point_on_plan(path, u, horizon);
    let noisy = truth + sampler.error(rng);
    Prediction {
        future_virtual_position: clamp_to_boundary(noisy, vspace, CLAMP_EPS),
        horizon,
    }
}

/// Constant-velocity extrapolation of the recent virtual velocity.
pub fn predict_position_cv(
    u: &UserState,
    recent_velocity: Vec2,
    horizon: f64,
    vspace: &SpaceMap,
) -> Prediction {
    let p = u.virtual_pose.position + recent_velocity * horizon;
    Prediction {
        future_virtual_position: clamp_to_boundary(p, vspace, CLAMP_EPS),
        horizon,
    }
}

/// Settings of the emulated direction classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionModel {
    /// Probability the reported class equals the true class.
    pub accuracy: f64,
    /// Probability mass placed on the reported class; 1/3 or less reports
    /// the uniform distribution.
    pub confidence: f64,
}

impl Default for DirectionModel {
    fn default() -> Self {
        DirectionModel {
            accuracy: 0.77,
            confidence: 0.77,
        }
    }
}

/// True direction class of a future virtual point relative to the current virtual pose.
pub fn true_direction(u: &UserState, future: Vec2) -> Direction {
    let d = future - u.virtual_pose.position;
    if d.length() <= 1e-9 {
        return Direction::Forward;
    }
    Direction::from_bearing(signed_angle(u.virtual_pose.forward(), d))
}

/// Reports the true class with probability `accuracy`, otherwise one of the
/// other two uniformly, as a polarized probability triple.
pub fn report_direction<R: Rng + ?Sized>(
    truth: Direction,
    model: &DirectionModel,
    rng: &mut R,
) -> DirectionProbs {
    let hit = rng.gen::<f64>() < model.accuracy;
    let reported = if hit {
        truth
    } else {
        let others: Vec<Direction> = Direction::ALL.into_iter().filter(|&d| d != truth).collect();
        others[rng.gen_range(0..2)]
    };
    if model.confidence <= 1.0 / 3.0 {
        return DirectionProbs::UNIFORM;
    }
    DirectionProbs::polarized(reported, model.confidence)
}

pub fn predict_direction_probs<R: Rng + ?Sized>(
    path: &PlannedPath,
    u: &UserState,
    horizon: f64,
    model: &DirectionModel,
    rng: &mut R,
) -> DirectionProbs {
    let truth = true_direction(u, future_point_on_plan(path, u, horizon));
    report_direction(truth, model, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PredictorKind {
    #[default]
    Oracle,
    ConstantVelocity,
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredictorKind::Oracle => "oracle",
            PredictorKind::ConstantVelocity => "cv",
        })
    }
}

impl FromStr for PredictorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "oracle" => Ok(PredictorKind::Oracle),
            "cv" => Ok(PredictorKind::ConstantVelocity),
            other => Err(format!(
                "unknown predictor `{other}` (expected oracle or cv)"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{SpaceKind, SpaceMap};
    use crate::geometry::Polygon;
    use crate::redirection::{Pose, WalkerParams};
    use crate::rng::{stream_rng, Stream};

    fn room() -> SpaceMap {
        SpaceMap::new(
            Polygon::rect(Vec2::ZERO, 20.0, 20.0),
            vec![],
            SpaceKind::Virtual,
        )
        .unwrap()
    }

    fn walker_at(p: Vec2, heading: f64) -> UserState {
        UserState::new(
            Pose::new(p, heading),
            Pose::new(Vec2::ZERO, 0.0),
            &WalkerParams::default(),
        )
    }

    fn straight_path(from: Vec2, to: Vec2) -> PlannedPath {
        PlannedPath {
            waypoints: vec![from, to],
            cursor: 1,
        }
    }

    #[test]
    fn zero_noise_is_the_plan() {
        let s = room();
        let u = walker_at(Vec2::ZERO, 0.0);
        let path = straight_path(Vec2::ZERO, Vec2::new(5.0, 0.0));
        let sampler = ErrorSampler::new(&NoiseModel::NONE);
        let p = predict_position_oracle(
            &path,
            &u,
            1.0,
            &sampler,
            &s,
            &mut stream_rng(1, Stream::Predictor),
        );
        assert_eq!(
            p.future_virtual_position,
            future_point_on_plan(&path, &u, 1.0)
        );
        assert_eq!(p.horizon, 1.0);
    }

    #[test]
    fn oracle_is_deterministic() {
        let s = room();
        let u = walker_at(Vec2::ZERO, 0.0);
        let path = straight_path(Vec2::ZERO, Vec2::new(5.0, 0.0));
        let sampler = ErrorSampler::new(&NoiseModel {
            mde_mean: 0.45,
            mde_sd: 0.35,
        });
        let a = predict_position_oracle(
            &path,
            &u,
            1.0,
            &sampler,
            &s,
            &mut stream_rng(9, Stream::Predictor),
        );
        let b = predict_position_oracle(
            &path,
            &u,
            1.0,
            &sampler,
            &s,
            &mut stream_rng(9, Stream::Predictor),
        );
        assert_eq!(a, b);
    }

    #[test]
    fn calibrated_parent_reproduces_moments() {
        let noise = NoiseModel {
            mde_mean: 0.45,
            mde_sd: 0.35,
        };
        let (loc, scale) = noise.truncated_parent();
        // closed-form moments of the truncated parent
        let a = -loc / scale;
        let l = inverse_mills(a);
        let mean = loc + scale * l;
        let sd = scale * (1.0 + a * l - l * l).sqrt();
        assert!((mean - 0.45).abs() < 1e-9, "{mean}");
        assert!((sd - 0.35).abs() < 1e-9, "{sd}");
    }

    #[test]
    fn cv_examples() {
        let s = room();
        let u = walker_at(Vec2::ZERO, 0.0);
        let p = predict_position_cv(&u, Vec2::new(1.0, 0.0), 1.0, &s);
        assert_eq!(p.future_virtual_position, Vec2::new(1.0, 0.0));
        let p = predict_position_cv(&u, Vec2::ZERO, 1.0, &s);
        assert_eq!(p.future_virtual_position, Vec2::ZERO);
        let u = walker_at(Vec2::new(9.5, 0.0), 0.0);
        let p = predict_position_cv(&u, Vec2::new(1.0, 0.0), 1.0, &s);
        assert!(p.future_virtual_position.x < 10.0);
        assert!(p.future_virtual_position.x > 9.99);
    }

    #[test]
    fn direction_bins() {
        assert_eq!(Direction::from_bearing(0.0), Direction::Forward);
        assert_eq!(Direction::from_bearing(PI / 2.0), Direction::Left);
        assert_eq!(Direction::from_bearing(-PI / 2.0), Direction::Right);
        assert_eq!(Direction::from_bearing(FRAC_PI_4), Direction::Forward);
    }

    #[test]
    fn perfect_classifier_reports_truth() {
        let u = walker_at(Vec2::ZERO, 0.0);
        let model = DirectionModel {
            accuracy: 1.0,
            confidence: 0.77,
        };
        let ahead = straight_path(Vec2::ZERO, Vec2::new(5.0, 0.0));
        let g = predict_direction_probs(
            &ahead,
            &u,
            1.0,
            &model,
            &mut stream_rng(2, Stream::Predictor),
        );
        assert_eq!(g.argmax(), Direction::Forward);
        assert!((g.forward - 0.77).abs() < 1e-12);
        assert!((g.left - 0.115).abs() < 1e-12);
        assert!((g.right - 0.115).abs() < 1e-12);
        assert_eq!(true_direction(&u, Vec2::new(0.0, 3.0)), Direction::Left);
        let r = report_direction(
            Direction::Left,
            &model,
            &mut stream_rng(3, Stream::Predictor),
        );
        assert_eq!(r.argmax(), Direction::Left);
    }

    #[test]
    fn probs_are_a_permutation_of_the_polarized_triple() {
        let model = DirectionModel::default();
        let mut rng = stream_rng(4, Stream::Predictor);
        for _ in 0..1000 {
            let p = report_direction(Direction::Right, &model, &mut rng);
            assert!((p.sum() - 1.0).abs() < 1e-9);
            let mut v = [p.forward, p.left, p.right];
            v.sort_by(f64::total_cmp);
            for (got, want) in v.iter().zip([0.115, 0.115, 0.77]) {
                assert!((got - want).abs() < 1e-12);
            }
        }
    }
}
