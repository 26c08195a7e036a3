//! Command-line driver: paired experiments, parameter sweeps, trajectory renders.

pub mod config;
pub mod render;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use redirect_core::controllers::ControllerKind;
use redirect_core::environment::build_physical_space;
use redirect_core::environment::scene::load_scene;
use redirect_core::simulation::{
    run_experiment, run_trial_observed, sweep, write_summary_csv, write_sweep_csv,
    write_trials_csv, Trace,
};
use thiserror::Error;

use config::{parse_grid, parse_value, Settings};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "rdwsim",
    version,
    about = "Redirected-walking simulation experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run paired vanilla/forecast comparisons and write trial and summary CSVs.
    Run(CommonArgs),
    /// Repeat a comparison over a grid of mu or f_t values.
    Sweep(SweepArgs),
    /// Replay one trial and draw its physical trajectory as SVG.
    Render(RenderArgs),
    /// Check a configuration without running anything.
    Validate(ValidateArgs),
    /// List every configuration key with its default.
    Keys,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// TOML file with flat dotted keys; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated experiments (e1..e4) or "all".
    #[arg(long)]
    pub experiment: Option<String>,
    /// Comma-separated controllers or "all".
    #[arg(long = "pairs", visible_aliases = ["pair", "controller"])]
    pub pairs: Option<String>,
    /// oracle or cv.
    #[arg(long)]
    pub predictor: Option<String>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Forecast horizon in seconds.
    #[arg(long)]
    pub ft: Option<f64>,
    #[arg(long)]
    pub trials: Option<i64>,
    #[arg(long)]
    pub seed: Option<i64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<i64>,
    /// Any configuration key, e.g. --set mpc.depth=3. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// mu or f_t.
    #[arg(long)]
    pub param: Option<String>,
    /// start:stop:step or a comma-separated list.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Keep every n-th frame of the path.
    #[arg(long, default_value_t = 6)]
    pub stride: u64,
    /// Also draw the forecast positions overlaid on the physical space.
    #[arg(long)]
    pub future: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Scene files to check as well.
    #[arg(long)]
    pub scene: Vec<PathBuf>,
}

/// Defaults, then the config file, then flags.
pub fn resolve(args: &CommonArgs) -> Result<Settings, CliError> {
    let mut s = Settings::default();
    if let Some(path) = &args.config {
        s.apply_file(path)?;
    }
    let mut flags: Vec<(&str, toml::Value)> = Vec::new();
    if let Some(v) = &args.experiment {
        flags.push(("experiments", v.clone().into()));
    }
    if let Some(v) = &args.pairs {
        flags.push(("pairs", v.clone().into()));
    }
    if let Some(v) = &args.predictor {
        flags.push(("predictor", v.clone().into()));
    }
    if let Some(v) = args.mu {
        flags.push(("mu", v.into()));
    }
    if let Some(v) = args.ft {
        flags.push(("f_t", v.into()));
    }
    if let Some(v) = args.trials {
        flags.push(("trials", v.into()));
    }
    if let Some(v) = args.seed {
        flags.push(("seed", v.into()));
    }
    if let Some(v) = args.threads {
        flags.push(("threads", v.into()));
    }
    for (key, value) in flags {
        s.apply(key, &value)?;
    }
    for item in &args.set {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{item}`")))?;
        s.apply(key.trim(), &parse_value(value.trim()))?;
    }
    if let Some(out) = &args.out {
        s.out = Some(out.clone());
    }
    s.check()?;
    Ok(s)
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(runtime)?;
            Ok(pool.install(f))
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

fn out_dir(s: &Settings) -> PathBuf {
    s.out.clone().unwrap_or_else(|| PathBuf::from("results"))
}

/// Runs every experiment × pair; writes `trials.csv` and `summary.csv`.
pub fn cmd_run(args: &CommonArgs) -> Result<(), CliError> {
    let s = resolve(args)?;
    let specs = s.specs();
    let results = with_threads(s.threads, || {
        specs
            .iter()
            .map(run_experiment)
            .collect::<Result<Vec<_>, _>>()
    })?
    .map_err(runtime)?;

    let dir = out_dir(&s);
    create_dir(&dir)?;
    let mut trials = Vec::new();
    let rows: Vec<_> = results
        .iter()
        .flat_map(|r| r.rows_a.iter().chain(&r.rows_b).cloned())
        .collect();
    write_trials_csv(&mut trials, &rows).map_err(runtime)?;
    write_file(&dir.join("trials.csv"), &trials)?;

    let mut summary = Vec::new();
    let summaries: Vec<_> = results
        .iter()
        .flat_map(|r| r.summaries.iter().cloned())
        .collect();
    write_summary_csv(&mut summary, &summaries).map_err(runtime)?;
    write_file(&dir.join("summary.csv"), &summary)?;

    for m in &summaries {
        println!(
            "{} {:>8} vs {:<10} {:<6} {:>8.3} vs {:<8.3} p_w {:.4}",
            m.experiment.id(),
            m.pair_a.id(),
            m.pair_b.id(),
            m.metric,
            m.mean_a,
            m.mean_b,
            m.p_w
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

/// Sweeps mu or f_t; writes `sweep.csv` (one row per point) and `sweep_summary.csv`.
pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let mut s = resolve(&args.common)?;
    if let Some(p) = &args.param {
        s.apply("sweep.param", &p.clone().into())?;
    }
    if let Some(g) = &args.grid {
        s.sweep_grid = parse_grid("sweep.grid", g)?;
    }
    s.check()?;
    let param = s.sweep_param;
    let grid = s.sweep_grid.clone();
    let specs = s.specs();
    let points = with_threads(s.threads, || {
        let mut all = Vec::new();
        for spec in &specs {
            all.extend(sweep(param, &grid, spec)?);
        }
        Ok::<_, redirect_core::simulation::SimulationError>(all)
    })?
    .map_err(runtime)?;

    let dir = out_dir(&s);
    create_dir(&dir)?;
    let mut table = Vec::new();
    write_sweep_csv(&mut table, param, &points).map_err(runtime)?;
    write_file(&dir.join("sweep.csv"), &table)?;
    let mut summary = Vec::new();
    let summaries: Vec<_> = points
        .iter()
        .flat_map(|p| p.result.summaries.iter().cloned())
        .collect();
    write_summary_csv(&mut summary, &summaries).map_err(runtime)?;
    write_file(&dir.join("sweep_summary.csv"), &summary)?;

    for p in &points {
        let r = p.result.summary("resets").expect("resets summary");
        println!(
            "{} {} {} = {:<6} resets {:.3} (vanilla {:.3}, p_w {:.4})",
            p.result.spec.experiment.id(),
            r.pair_b.id(),
            param.id(),
            p.value,
            r.mean_b,
            r.mean_a,
            r.p_w
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

/// Replays the first trial of the first experiment and controller.
pub fn cmd_render(args: &RenderArgs) -> Result<(), CliError> {
    let s = resolve(&args.common)?;
    let experiment = s.experiments[0];
    let controller: ControllerKind = s.controllers[0];
    let cfg = s.trial(experiment, controller, s.seed);
    let mut trace = Trace::new(args.stride);
    let metrics = run_trial_observed(&cfg, &mut trace).map_err(runtime)?;
    let physical = build_physical_space(experiment);
    let title = format!(
        "{} {} seed {}: {} resets over {:.1} m",
        experiment.id(),
        controller.id(),
        cfg.seed,
        metrics.resets,
        metrics.virtual_distance
    );
    let svg = render::render_svg(&physical, &trace, &title, args.future);
    let path = s
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("trajectory.svg"));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_file(&path, svg.as_bytes())?;
    println!("{title}");
    println!("wrote {}", path.display());
    Ok(())
}

/// Resolves the configuration and checks scene files; writes nothing.
pub fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let s = resolve(&args.common)?;
    for path in &args.scene {
        load_scene(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    let specs = s.specs();
    println!(
        "ok: {} comparison(s), {} trials each, base seed {}",
        specs.len(),
        s.trials,
        s.seed
    );
    for spec in &specs {
        println!(
            "  {} {} vs {} (mu {})",
            spec.experiment.id(),
            spec.pair.0.id(),
            spec.pair.1.id(),
            spec.template.mu
        );
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Render(a) => cmd_render(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Keys => {
            for (key, doc) in config::KEYS {
                println!("{key:<28} {doc}");
            }
            Ok(())
        }
    }
}
