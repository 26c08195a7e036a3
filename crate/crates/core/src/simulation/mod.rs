//! The 60 Hz trial loop and the paired Monte Carlo harness built on it.

mod harness;
mod trace;

pub use harness::{
    run_experiment, summary_header, sweep, sweep_header, trial_header, write_summary_csv,
    write_sweep_csv, write_trials_csv, ExperimentResult, ExperimentSpec, MetricSummary, SweepParam,
    SweepPoint, TrialRow,
};
pub use trace::{Trace, TraceFrame};

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use thiserror::Error;

use crate::agent::{plan_virtual_path, step_agent, MotionCommand, PlanError, PlannedPath};
use crate::controllers::{
    Controller, ControllerKind, ControllerParams, FrameInput, SteeringDecision,
};
use crate::environment::{
    build_physical_space, generate_virtual_space, spawn_target, EnvironmentError, Experiment,
    NavGrid, SpaceMap, Target, VirtualSpaceParams,
};
use crate::geometry::Vec2;
use crate::predictor::{
    predict_direction_probs, predict_position_cv, predict_position_oracle, report_direction,
    true_direction, DirectionModel, DirectionProbs, ErrorSampler, NoiseModel, Prediction,
    PredictorKind,
};
use crate::redirection::{
    apply_redirection, check_reset, execute_reset, Pose, ResetEvent, UserState, WalkerParams,
};
use crate::rng::{stream_rng, Stream};

/// Everything that determines one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub experiment: Experiment,
    pub controller: ControllerKind,
    pub predictor: PredictorKind,
    pub mu: f64,
    pub f_t: f64,
    pub seed: u64,
    /// Virtual metres walked before the episode ends.
    pub distance_budget: f64,
    pub frame_rate: f64,
    pub walker: WalkerParams,
    pub noise: NoiseModel,
    pub direction: DirectionModel,
    pub controller_params: ControllerParams,
    pub virtual_space: VirtualSpaceParams,
    /// Seconds after a reset during which forecasts are ignored.
    pub prediction_holdoff: f64,
    /// Window (s) of the velocity estimate fed to the constant-velocity predictor.
    pub velocity_window: f64,
    /// Clearance above the body radius required of the initial physical position.
    pub start_margin: f64,
    /// Simulated-time cap; episodes hitting it are flagged.
    pub max_time: f64,
}

impl TrialConfig {
    pub fn new(experiment: Experiment, controller: ControllerKind, seed: u64) -> Self {
        TrialConfig {
            experiment,
            controller,
            predictor: PredictorKind::Oracle,
            mu: controller.default_mu(),
            f_t: 1.0,
            seed,
            distance_budget: 100.0,
            frame_rate: 60.0,
            walker: WalkerParams::default(),
            noise: NoiseModel {
                mde_mean: 0.45,
                mde_sd: 0.35,
            },
            direction: DirectionModel::default(),
            controller_params: ControllerParams::default(),
            virtual_space: VirtualSpaceParams::default(),
            prediction_holdoff: 0.5,
            velocity_window: 0.5,
            start_margin: 0.1,
            max_time: 3600.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |what: &str| Err(SimulationError::InvalidConfig(what.to_string()));
        if !(self.distance_budget > 0.0 && self.distance_budget.is_finite()) {
            return bad("distance_budget must be positive");
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return bad("frame_rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return bad("mu must lie in [0, 1]");
        }
        if !(self.f_t > 0.0 && self.f_t.is_finite()) {
            return bad("f_t must be positive");
        }
        if !(self.walker.body_radius > 0.0
            && self.walker.linear_speed > 0.0
            && self.walker.angular_speed > 0.0)
        {
            return bad("walker speeds and body radius must be positive");
        }
        if !(self.noise.mde_mean >= 0.0 && self.noise.mde_sd >= 0.0) {
            return bad("prediction error moments must be non-negative");
        }
        if !(self.direction.accuracy > 1.0 / 3.0 && self.direction.accuracy <= 1.0) {
            return bad("dir_accuracy must lie in (1/3, 1]");
        }
        if self.controller_params.mpc.depth == 0 {
            return bad("mpc_depth must be at least 1");
        }
        Ok(())
    }

    fn controller_params(&self) -> ControllerParams {
        let mut p = self.controller_params;
        p.mu = if self.controller.is_forecast() {
            self.mu
        } else {
            0.0
        };
        p.mpc.limits = p.limits;
        p
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Environment(#[from] EnvironmentError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("no valid {0} start pose found")]
    NoStartPose(&'static str),
}

/// Outcome of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub resets: usize,
    pub virtual_distance: f64,
    pub mdbr: f64,
    /// MDbR fell back to the total distance because nothing reset.
    pub no_reset: bool,
    pub targets_collected: usize,
    /// Ended early on a pose with no free reset direction.
    pub aborted: bool,
    /// Ended early on the simulated-time cap.
    pub timed_out: bool,
    pub frames: u64,
    pub wall_time: f64,
}

/// Mean virtual distance between consecutive resets, counting start to first
/// reset. With no resets this is the whole distance and the flag is set.
pub fn compute_mdbr(reset_distances: &[f64], total_virtual_distance: f64) -> (f64, bool) {
    match reset_distances.last() {
        None => (total_virtual_distance, true),
        // the deltas telescope to the last reset's distance
        Some(&last) => (last / reset_distances.len() as f64, false),
    }
}

/// What an observer sees each frame, before the walker moves.
pub struct FrameView<'a> {
    pub frame: u64,
    pub time: f64,
    pub user: &'a UserState,
    pub command: MotionCommand,
    pub decision: &'a SteeringDecision,
    pub prediction: Option<Prediction>,
    pub path: &'a PlannedPath,
    pub target: &'a Target,
    pub physical: &'a SpaceMap,
    pub virtual_space: &'a SpaceMap,
}

/// Hooks into the trial loop.
pub trait TrialObserver {
    fn frame(&mut self, _view: &FrameView<'_>) {}
    fn reset(&mut self, _event: &ResetEvent, _after: &UserState) {}
}

impl TrialObserver for () {}

/// Runs one episode.
pub fn run_trial(cfg: &TrialConfig) -> Result<EpisodeMetrics, SimulationError> {
    run_trial_observed(cfg, &mut ())
}

const MAX_SCENE_DRAWS: usize = 16;
const MAX_POSE_DRAWS: usize = 100_000;

/// Draws the virtual scene, retrying on generation failure with later draws of the same stream.
fn draw_virtual_space<R: Rng>(
    rng: &mut R,
    params: &VirtualSpaceParams,
) -> Result<SpaceMap, EnvironmentError> {
    let mut last = None;
    for _ in 0..MAX_SCENE_DRAWS {
        match generate_virtual_space(rng, params) {
            Ok(s) => return Ok(s),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one draw"))
}

fn draw_virtual_start<R: Rng>(
    rng: &mut R,
    vspace: &SpaceMap,
    nav: &NavGrid,
    params: &VirtualSpaceParams,
) -> Result<Pose, SimulationError> {
    let main = nav.largest_component();
    let (lo, hi) = vspace.boundary().bounds();
    for _ in 0..MAX_POSE_DRAWS {
        let p = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        let heading = rng.gen_range(-PI..PI);
        if vspace.min_clearance(p) < params.target_clearance.max(params.nav_radius) {
            continue;
        }
        if main.is_some() && nav.attach(vspace, p).and_then(|c| nav.component_of(c)) == main {
            return Ok(Pose::new(p, heading));
        }
    }
    Err(SimulationError::NoStartPose("virtual"))
}

fn draw_physical_start<R: Rng>(
    rng: &mut R,
    physical: &SpaceMap,
    min_clearance: f64,
) -> Result<Pose, SimulationError> {
    let (lo, hi) = physical.boundary().bounds();
    for _ in 0..MAX_POSE_DRAWS {
        let p = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        let heading = rng.gen_range(-PI..PI);
        if physical.min_clearance(p) > min_clearance {
            return Ok(Pose::new(p, heading));
        }
    }
    Err(SimulationError::NoStartPose("physical"))
}

/// Runs one episode, reporting every frame and reset to `observer`.
pub fn run_trial_observed<O: TrialObserver + ?Sized>(
    cfg: &TrialConfig,
    observer: &mut O,
) -> Result<EpisodeMetrics, SimulationError> {
    cfg.validate()?;
    let started = Instant::now();
    let dt = 1.0 / cfg.frame_rate;
    let physical = build_physical_space(cfg.experiment);
    let params = cfg.controller_params();
    let limits = params.limits;

    let mut scene_rng = stream_rng(cfg.seed, Stream::Scene);
    let mut pose_rng = stream_rng(cfg.seed, Stream::Poses);
    let mut target_rng = stream_rng(cfg.seed, Stream::Targets);
    let mut predictor_rng = stream_rng(cfg.seed, Stream::Predictor);

    let vspace = draw_virtual_space(&mut scene_rng, &cfg.virtual_space)?;
    let nav = NavGrid::build(
        &vspace,
        NavGrid::DEFAULT_RESOLUTION,
        cfg.virtual_space.nav_radius,
    );
    let v_start = draw_virtual_start(&mut pose_rng, &vspace, &nav, &cfg.virtual_space)?;
    let p_start = draw_physical_start(
        &mut pose_rng,
        &physical,
        cfg.walker.body_radius + cfg.start_margin,
    )?;
    let mut u = UserState::new(v_start, p_start, &cfg.walker);

    let mut target = spawn_target(
        &mut target_rng,
        u.virtual_pose.position,
        &vspace,
        &nav,
        &cfg.virtual_space,
    )?;
    let mut path = plan_virtual_path(u.virtual_pose.position, &target, &vspace, &nav)?;

    let mut controller = Controller::new(cfg.controller, params);
    let sampler = ErrorSampler::new(&cfg.noise);
    let replan_every = ((params.mpc.replan_interval * cfg.frame_rate).round() as u64).max(1);
    let window = ((cfg.velocity_window * cfg.frame_rate).round() as usize).max(1);
    let mut history: VecDeque<Vec2> = VecDeque::with_capacity(window + 1);

    let mut time = 0.0;
    let mut frame: u64 = 0;
    let mut virtual_distance = 0.0;
    let mut reset_distances: Vec<f64> = Vec::new();
    let mut targets_collected = 0;
    let mut forecast_resumes_at = 0.0;
    let mut frames_since_plan = replan_every;
    let mut aborted = false;
    let mut timed_out = false;

    while virtual_distance < cfg.distance_budget {
        if time >= cfg.max_time {
            timed_out = true;
            break;
        }
        let mut step = step_agent(&mut path, &u, &target, dt);
        if step.target_reached {
            targets_collected += 1;
            target = spawn_target(
                &mut target_rng,
                u.virtual_pose.position,
                &vspace,
                &nav,
                &cfg.virtual_space,
            )?;
            path = plan_virtual_path(u.virtual_pose.position, &target, &vspace, &nav)?;
            step = step_agent(&mut path, &u, &target, dt);
        }
        let command = step.command;

        history.push_back(u.virtual_pose.position);
        if history.len() > window + 1 {
            history.pop_front();
        }

        let forecasting = time >= forecast_resumes_at;
        let prediction = if cfg.controller.uses_position_forecast() && forecasting {
            Some(match cfg.predictor {
                PredictorKind::Oracle => predict_position_oracle(
                    &path,
                    &u,
                    cfg.f_t,
                    &sampler,
                    &vspace,
                    &mut predictor_rng,
                ),
                PredictorKind::ConstantVelocity => {
                    let span = (history.len() - 1) as f64 * dt;
                    let velocity = if span > 0.0 {
                        (*history.back().expect("pushed above") - history[0]) / span
                    } else {
                        Vec2::ZERO
                    };
                    predict_position_cv(&u, velocity, cfg.f_t, &vspace)
                }
            })
        } else {
            None
        };

        let replan = frames_since_plan >= replan_every;
        let direction = if cfg.controller.uses_direction_forecast() && replan && forecasting {
            Some(forecast_direction(
                cfg,
                &path,
                &u,
                &history,
                dt,
                &vspace,
                &mut predictor_rng,
            ))
        } else {
            None
        };
        if replan {
            frames_since_plan = 0;
        }
        frames_since_plan += 1;

        let input = FrameInput {
            user: &u,
            d_theta: command.d_theta,
            prediction,
            direction,
            physical: &physical,
            virtual_space: &vspace,
        };
        let decision = controller.decide(&input, replan);
        assert!(
            decision.gains.within(&limits),
            "controller {} emitted gains outside the thresholds: {:?}",
            cfg.controller,
            decision.gains
        );
        observer.frame(&FrameView {
            frame,
            time,
            user: &u,
            command,
            decision: &decision,
            prediction,
            path: &path,
            target: &target,
            physical: &physical,
            virtual_space: &vspace,
        });

        let before = physical.min_clearance(u.physical_pose.position);
        u = apply_redirection(&u, command.dv, command.d_theta, &decision.gains);
        virtual_distance += command.dv;
        time += dt;
        frame += 1;

        // Only motion toward an obstacle triggers; turning in place at a wall does not.
        if check_reset(&u, &physical) && physical.min_clearance(u.physical_pose.position) < before {
            match execute_reset(&u, &physical, time, virtual_distance) {
                Ok((after, event)) => {
                    u = after;
                    reset_distances.push(virtual_distance);
                    observer.reset(&event, &u);
                    forecast_resumes_at = time + cfg.prediction_holdoff;
                    frames_since_plan = replan_every;
                }
                Err(_) => {
                    aborted = true;
                    break;
                }
            }
        }
    }

    let (mdbr, no_reset) = compute_mdbr(&reset_distances, virtual_distance);
    Ok(EpisodeMetrics {
        resets: reset_distances.len(),
        virtual_distance,
        mdbr,
        no_reset,
        targets_collected,
        aborted,
        timed_out,
        frames: frame,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

fn forecast_direction<R: Rng>(
    cfg: &TrialConfig,
    path: &PlannedPath,
    u: &UserState,
    history: &VecDeque<Vec2>,
    dt: f64,
    vspace: &SpaceMap,
    rng: &mut R,
) -> DirectionProbs {
    match cfg.predictor {
        PredictorKind::Oracle => predict_direction_probs(path, u, cfg.f_t, &cfg.direction, rng),
        PredictorKind::ConstantVelocity => {
            let span = (history.len() - 1) as f64 * dt;
            let velocity = if span > 0.0 {
                (*history.back().expect("non-empty") - history[0]) / span
            } else {
                Vec2::ZERO
            };
            let p = predict_position_cv(u, velocity, cfg.f_t, vspace);
            report_direction(
                true_direction(u, p.future_virtual_position),
                &cfg.direction,
                rng,
            )
        }
    }
}
