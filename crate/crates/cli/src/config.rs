//! Run configuration: defaults, then a TOML file, then command-line flags.
//!
//! Keys are flat and dotted (`walker.body_radius = 0.5`); a `[walker]` table
//! works too. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use redirect_core::controllers::ControllerKind;
use redirect_core::environment::Experiment;
use redirect_core::predictor::PredictorKind;
use redirect_core::simulation::{ExperimentSpec, SweepParam, TrialConfig};
use toml::Value;

use crate::CliError;

/// Every accepted key with its default and meaning, for `--help`-style listings.
pub const KEYS: &[(&str, &str)] = &[
    (
        "experiments",
        "physical spaces to run, e.g. [\"e1\", \"e4\"] or \"all\" (default all)",
    ),
    (
        "pairs",
        "vanilla controllers to compare with their forecast variants, or \"all\" (default all)",
    ),
    ("trials", "paired trials per experiment (default 100)"),
    (
        "seed",
        "base seed; trial i uses seed + i in both arms (default 20240)",
    ),
    ("threads", "worker threads (default: all cores)"),
    ("out", "output directory or file"),
    ("predictor", "oracle | cv (default oracle)"),
    (
        "mu",
        "forecast weight in [0, 1] (default 0.5 f-s2c, 0.7 f-tapf, 0.5 f-arc)",
    ),
    ("f_t", "forecast horizon in seconds (default 1)"),
    (
        "noise.mde_mean",
        "mean displacement error of the oracle, m (default 0.45)",
    ),
    (
        "noise.mde_sd",
        "SD of the displacement error, m (default 0.35)",
    ),
    (
        "direction.accuracy",
        "direction classifier accuracy (default 0.77)",
    ),
    (
        "direction.confidence",
        "probability mass on the reported direction (default 0.77)",
    ),
    (
        "episode.distance_budget",
        "virtual metres per episode (default 100)",
    ),
    ("episode.frame_rate", "frames per second (default 60)"),
    (
        "episode.max_time",
        "simulated seconds before an episode times out (default 3600)",
    ),
    (
        "episode.start_margin",
        "extra physical clearance of start poses, m (default 0.1)",
    ),
    (
        "forecast.holdoff",
        "seconds forecasts are ignored after a reset (default 0.5)",
    ),
    (
        "forecast.velocity_window",
        "history used by the cv predictor, s (default 0.5)",
    ),
    ("walker.linear_speed", "m/s (default 1)"),
    ("walker.angular_speed_deg", "deg/s (default 90)"),
    (
        "walker.body_radius",
        "physical reset distance, m (default 0.5)",
    ),
    ("gains.min_translation", "(default 0.86)"),
    ("gains.max_translation", "(default 1.26)"),
    ("gains.min_rotation", "(default 0.67)"),
    ("gains.max_rotation", "(default 1.24)"),
    ("gains.min_curvature_radius", "m (default 7.5)"),
    (
        "steer.dead_zone_deg",
        "no curvature below this angle to the steering target (default 2)",
    ),
    (
        "arc.saturation",
        "misalignment at full curvature, m (default 0.5)",
    ),
    ("arc.range", "probe ray length, m (default 10)"),
    (
        "arc.distance_floor",
        "floor on front distances in the translation gain, m (default 0.1)",
    ),
    (
        "arc.future_from_current",
        "orient the forecast pose from current to future position (default true)",
    ),
    ("mpc.depth", "stages searched (default 4)"),
    ("mpc.alpha", "per-stage decay (default 0.8)"),
    ("mpc.segment_length", "m per stage (default 1)"),
    ("mpc.step", "integration step, m (default 0.25)"),
    ("mpc.reset_cost", "(default 1000)"),
    ("mpc.proximity_range", "m (default 1)"),
    ("mpc.curvature_cost", "(default 0.1)"),
    ("mpc.replan_interval", "s (default 0.5)"),
    (
        "scene.half_size",
        "half width of the virtual room, m (default 10)",
    ),
    ("scene.min_walls", "(default 10)"),
    ("scene.max_walls", "(default 15)"),
    ("scene.wall_length", "m (default 4)"),
    ("scene.wall_thickness", "m (default 0.1)"),
    ("scene.min_separation", "m (default 0.6)"),
    (
        "scene.nav_radius",
        "planning radius of the virtual walker, m (default 0.25)",
    ),
    ("scene.min_connected_fraction", "(default 0.95)"),
    ("scene.target_min_distance", "m (default 0.2)"),
    ("scene.target_max_distance", "m (default 8)"),
    ("scene.target_clearance", "m (default 0.3)"),
    ("scene.target_radius", "m (default 0.2)"),
    ("sweep.param", "mu | f_t (default mu)"),
    (
        "sweep.grid",
        "\"start:stop:step\" or a list of values (default \"0:1:0.1\")",
    ),
];

/// Fully resolved settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub experiments: Vec<Experiment>,
    /// As given; `run` maps each to its vanilla controller.
    pub controllers: Vec<ControllerKind>,
    pub trials: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub mu: Option<f64>,
    pub sweep_param: SweepParam,
    pub sweep_grid: Vec<f64>,
    /// Everything per-trial; experiment, controller, seed and mu are filled in per run.
    pub template: TrialConfig,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            experiments: Experiment::ALL.to_vec(),
            controllers: vanilla_controllers(),
            trials: 100,
            seed: 20240,
            threads: None,
            out: None,
            mu: None,
            sweep_param: SweepParam::Mu,
            sweep_grid: parse_grid("sweep.grid", "0:1:0.1").expect("default grid"),
            template: TrialConfig::new(Experiment::E1, ControllerKind::Tapf, 0),
        }
    }
}

fn vanilla_controllers() -> Vec<ControllerKind> {
    ControllerKind::PAIRS.iter().map(|p| p.0).collect()
}

fn err(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("`{key}` {msg}"))
}

fn float(key: &str, v: &Value) -> Result<f64, CliError> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(err(
            key,
            format!("expects a number, got {}", other.type_str()),
        )),
    }
}

fn int(key: &str, v: &Value) -> Result<i64, CliError> {
    match v {
        Value::Integer(i) => Ok(*i),
        other => Err(err(
            key,
            format!("expects an integer, got {}", other.type_str()),
        )),
    }
}

fn count(key: &str, v: &Value, min: i64) -> Result<usize, CliError> {
    let i = int(key, v)?;
    if i < min {
        return Err(err(key, format!("must be at least {min} (got {i})")));
    }
    Ok(i as usize)
}

fn string<'a>(key: &str, v: &'a Value) -> Result<&'a str, CliError> {
    v.as_str()
        .ok_or_else(|| err(key, format!("expects a string, got {}", v.type_str())))
}

fn positive(key: &str, v: &Value) -> Result<f64, CliError> {
    let x = float(key, v)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(err(key, format!("must be positive (got {x})")));
    }
    Ok(x)
}

fn non_negative(key: &str, v: &Value) -> Result<f64, CliError> {
    let x = float(key, v)?;
    if !(x >= 0.0 && x.is_finite()) {
        return Err(err(key, format!("must be non-negative (got {x})")));
    }
    Ok(x)
}

fn in_range(key: &str, v: &Value, lo: f64, hi: f64) -> Result<f64, CliError> {
    let x = float(key, v)?;
    if !(lo..=hi).contains(&x) {
        return Err(err(key, format!("must lie in [{lo}, {hi}] (got {x})")));
    }
    Ok(x)
}

/// A list given either as an array of strings or as one comma-separated string.
fn names(key: &str, v: &Value) -> Result<Vec<String>, CliError> {
    match v {
        Value::String(s) => Ok(s
            .split(',')
            .map(|p| p.trim().to_string())
            .filter(|p| !p.is_empty())
            .collect()),
        Value::Array(items) => items
            .iter()
            .map(|i| string(key, i).map(str::to_string))
            .collect(),
        other => Err(err(
            key,
            format!("expects a list of names, got {}", other.type_str()),
        )),
    }
}

fn parse_experiments(key: &str, v: &Value) -> Result<Vec<Experiment>, CliError> {
    let list = names(key, v)?;
    if list.iter().any(|n| n.eq_ignore_ascii_case("all")) {
        return Ok(Experiment::ALL.to_vec());
    }
    let mut out = Vec::new();
    for n in list {
        let e = n.parse::<Experiment>().map_err(|e| err(key, e))?;
        if !out.contains(&e) {
            out.push(e);
        }
    }
    if out.is_empty() {
        return Err(err(key, "must name at least one experiment"));
    }
    Ok(out)
}

fn parse_controllers(key: &str, v: &Value) -> Result<Vec<ControllerKind>, CliError> {
    let list = names(key, v)?;
    if list.iter().any(|n| n.eq_ignore_ascii_case("all")) {
        return Ok(vanilla_controllers());
    }
    let mut out = Vec::new();
    for n in list {
        let k = n.parse::<ControllerKind>().map_err(|e| err(key, e))?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    if out.is_empty() {
        return Err(err(key, "must name at least one controller"));
    }
    Ok(out)
}

/// `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |what: &str| err(key, format!("{what} (got \"{text}\")"));
    let values: Vec<f64> = if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("expects start:stop:step"))?;
        let [start, stop, step] = parts[..] else {
            return Err(bad("expects start:stop:step"));
        };
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad("needs a positive step and stop >= start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if n > 10_000 {
            return Err(bad("has too many points"));
        }
        // round away accumulated binary noise so 0.1 steps print as 0.3, not 0.30000000000000004
        (0..n)
            .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
            .collect()
    } else {
        text.split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("expects numbers"))?
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad("expects finite numbers"));
    }
    Ok(values)
}

impl Settings {
    /// Sets one key.
    pub fn apply(&mut self, key: &str, v: &Value) -> Result<(), CliError> {
        let t = &mut self.template;
        let c = &mut t.controller_params;
        let s = &mut t.virtual_space;
        match key {
            "experiments" => self.experiments = parse_experiments(key, v)?,
            "pairs" => self.controllers = parse_controllers(key, v)?,
            "trials" => self.trials = count(key, v, 2)?,
            "seed" => {
                let i = int(key, v)?;
                self.seed = u64::try_from(i)
                    .map_err(|_| err(key, format!("must be non-negative (got {i})")))?;
            }
            "threads" => self.threads = Some(count(key, v, 1)?),
            "out" => self.out = Some(PathBuf::from(string(key, v)?)),
            "predictor" => {
                t.predictor = string(key, v)?
                    .parse::<PredictorKind>()
                    .map_err(|e| err(key, e))?
            }
            "mu" => self.mu = Some(in_range(key, v, 0.0, 1.0)?),
            "f_t" => t.f_t = positive(key, v)?,
            "noise.mde_mean" => t.noise.mde_mean = non_negative(key, v)?,
            "noise.mde_sd" => t.noise.mde_sd = non_negative(key, v)?,
            "direction.accuracy" => {
                let x = float(key, v)?;
                if !(x > 1.0 / 3.0 && x <= 1.0) {
                    return Err(err(key, format!("must lie in (1/3, 1] (got {x})")));
                }
                t.direction.accuracy = x;
            }
            "direction.confidence" => t.direction.confidence = in_range(key, v, 0.0, 1.0)?,
            "episode.distance_budget" => t.distance_budget = positive(key, v)?,
            "episode.frame_rate" => t.frame_rate = positive(key, v)?,
            "episode.max_time" => t.max_time = positive(key, v)?,
            "episode.start_margin" => t.start_margin = non_negative(key, v)?,
            "forecast.holdoff" => t.prediction_holdoff = non_negative(key, v)?,
            "forecast.velocity_window" => t.velocity_window = positive(key, v)?,
            "walker.linear_speed" => t.walker.linear_speed = positive(key, v)?,
            "walker.angular_speed_deg" => t.walker.angular_speed = positive(key, v)?.to_radians(),
            "walker.body_radius" => t.walker.body_radius = positive(key, v)?,
            "gains.min_translation" => c.limits.min_translation = positive(key, v)?,
            "gains.max_translation" => c.limits.max_translation = positive(key, v)?,
            "gains.min_rotation" => c.limits.min_rotation = positive(key, v)?,
            "gains.max_rotation" => c.limits.max_rotation = positive(key, v)?,
            "gains.min_curvature_radius" => c.limits.min_curvature_radius = positive(key, v)?,
            "steer.dead_zone_deg" => c.dead_zone = in_range(key, v, 0.0, 180.0)?.to_radians(),
            "arc.saturation" => c.arc_saturation = positive(key, v)?,
            "arc.range" => c.arc_range = positive(key, v)?,
            "arc.distance_floor" => c.arc_distance_floor = positive(key, v)?,
            "arc.future_from_current" => {
                c.arc_future_from_current = v
                    .as_bool()
                    .ok_or_else(|| err(key, format!("expects a boolean, got {}", v.type_str())))?
            }
            "mpc.depth" => {
                let d = count(key, v, 1)?;
                if d > 8 {
                    return Err(err(key, format!("must be at most 8 (got {d})")));
                }
                c.mpc.depth = d;
            }
            "mpc.alpha" => c.mpc.alpha = in_range(key, v, 0.0, 1.0)?,
            "mpc.segment_length" => c.mpc.segment_length = positive(key, v)?,
            "mpc.step" => c.mpc.step = positive(key, v)?,
            "mpc.reset_cost" => c.mpc.reset_cost = non_negative(key, v)?,
            "mpc.proximity_range" => c.mpc.proximity_range = positive(key, v)?,
            "mpc.curvature_cost" => c.mpc.curvature_cost = non_negative(key, v)?,
            "mpc.replan_interval" => c.mpc.replan_interval = positive(key, v)?,
            "scene.half_size" => s.half_size = positive(key, v)?,
            "scene.min_walls" => s.min_walls = count(key, v, 0)?,
            "scene.max_walls" => s.max_walls = count(key, v, 0)?,
            "scene.wall_length" => s.wall_length = positive(key, v)?,
            "scene.wall_thickness" => s.wall_thickness = positive(key, v)?,
            "scene.min_separation" => s.min_separation = non_negative(key, v)?,
            "scene.nav_radius" => s.nav_radius = positive(key, v)?,
            "scene.min_connected_fraction" => {
                s.min_connected_fraction = in_range(key, v, 0.0, 1.0)?
            }
            "scene.target_min_distance" => s.target_min_distance = non_negative(key, v)?,
            "scene.target_max_distance" => s.target_max_distance = positive(key, v)?,
            "scene.target_clearance" => s.target_clearance = non_negative(key, v)?,
            "scene.target_radius" => s.target_radius = positive(key, v)?,
            "sweep.param" => {
                self.sweep_param = string(key, v)?
                    .parse::<SweepParam>()
                    .map_err(|e| err(key, e))?;
            }
            "sweep.grid" => {
                self.sweep_grid = match v {
                    Value::String(text) => parse_grid(key, text)?,
                    Value::Array(items) => items
                        .iter()
                        .map(|i| float(key, i))
                        .collect::<Result<_, _>>()?,
                    other => {
                        return Err(err(
                            key,
                            format!("expects a grid string or a list, got {}", other.type_str()),
                        ))
                    }
                };
                if self.sweep_grid.is_empty() {
                    return Err(err(key, "must not be empty"));
                }
            }
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies every key of a TOML document.
    pub fn apply_toml(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(format!("{origin}: {}", e.message())))?;
        let mut flat = Vec::new();
        flatten("", &Value::Table(table), &mut flat);
        for (key, value) in flat {
            self.apply(&key, &value)
                .map_err(|e| CliError::Config(format!("{origin}: {}", e.message())))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_toml(&text, &path.display().to_string())
    }

    /// Checks that span several keys.
    pub fn check(&self) -> Result<(), CliError> {
        let l = &self.template.controller_params.limits;
        if l.min_translation > l.max_translation {
            return Err(err(
                "gains.min_translation",
                "must not exceed gains.max_translation",
            ));
        }
        if l.min_rotation > l.max_rotation {
            return Err(err(
                "gains.min_rotation",
                "must not exceed gains.max_rotation",
            ));
        }
        let s = &self.template.virtual_space;
        if s.min_walls > s.max_walls {
            return Err(err("scene.min_walls", "must not exceed scene.max_walls"));
        }
        if s.target_min_distance > s.target_max_distance {
            return Err(err(
                "scene.target_min_distance",
                "must not exceed scene.target_max_distance",
            ));
        }
        for &v in &self.sweep_grid {
            let ok = match self.sweep_param {
                SweepParam::Mu => (0.0..=1.0).contains(&v),
                SweepParam::Ft => v > 0.0,
            };
            if !ok {
                return Err(err(
                    "sweep.grid",
                    format!("value {v} is out of range for {}", self.sweep_param.id()),
                ));
            }
        }
        for spec in self.specs() {
            spec.template
                .validate()
                .map_err(|e| CliError::Config(format!("{}: {e}", spec.pair.1.id())))?;
        }
        Ok(())
    }

    /// One paired comparison per experiment and vanilla controller.
    pub fn specs(&self) -> Vec<ExperimentSpec> {
        let mut pairs: Vec<ControllerKind> = Vec::new();
        for k in &self.controllers {
            if !pairs.contains(&k.vanilla()) {
                pairs.push(k.vanilla());
            }
        }
        let mut out = Vec::new();
        for &e in &self.experiments {
            for &k in &pairs {
                out.push(self.spec(e, k));
            }
        }
        out
    }

    pub fn spec(&self, experiment: Experiment, vanilla: ControllerKind) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(experiment, vanilla, self.trials, self.seed);
        let forecast = spec.pair.1;
        spec.template = TrialConfig {
            experiment,
            controller: forecast,
            seed: self.seed,
            mu: self.mu.unwrap_or(forecast.default_mu()),
            ..self.template.clone()
        };
        spec
    }

    /// Trial settings for a single controller, as `render` uses them.
    pub fn trial(
        &self,
        experiment: Experiment,
        controller: ControllerKind,
        seed: u64,
    ) -> TrialConfig {
        TrialConfig {
            experiment,
            controller,
            seed,
            mu: if controller.is_forecast() {
                self.mu.unwrap_or(controller.default_mu())
            } else {
                0.0
            },
            ..self.template.clone()
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Table(t) => {
            for (k, inner) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, inner, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

/// Reads a `--set` value: TOML syntax when it parses, a bare string otherwise.
pub fn parse_value(text: &str) -> Value {
    format!("v = {text}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}
