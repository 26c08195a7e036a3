use std::io::Write;

use rayon::prelude::*;

use super::{run_trial, EpisodeMetrics, SimulationError, TrialConfig};
use crate::controllers::ControllerKind;
use crate::environment::Experiment;
use crate::predictor::PredictorKind;
use crate::stats::{mean_sd, paired_t_test, wilcoxon_signed_rank, PairedSample};

/// A paired comparison of two controllers over seeds `base_seed..base_seed + trials`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub experiment: Experiment,
    pub pair: (ControllerKind, ControllerKind),
    pub trials: usize,
    pub base_seed: u64,
    /// Everything else; its experiment, controller and seed are overwritten per trial.
    pub template: TrialConfig,
}

impl ExperimentSpec {
    /// Vanilla-versus-forecast comparison with the forecast controller's default weight.
    pub fn new(
        experiment: Experiment,
        vanilla: ControllerKind,
        trials: usize,
        base_seed: u64,
    ) -> Self {
        let forecast = vanilla.forecast();
        ExperimentSpec {
            experiment,
            pair: (vanilla, forecast),
            trials,
            base_seed,
            template: TrialConfig::new(experiment, forecast, base_seed),
        }
    }

    fn config(&self, controller: ControllerKind, trial: usize) -> TrialConfig {
        TrialConfig {
            experiment: self.experiment,
            controller,
            seed: self.base_seed.wrapping_add(trial as u64),
            ..self.template.clone()
        }
    }

    /// Fusion weight a controller actually runs with under this spec.
    pub fn effective_mu(&self, controller: ControllerKind) -> f64 {
        if controller.is_forecast() {
            self.template.mu
        } else {
            0.0
        }
    }
}

/// One episode's outcome with the settings that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub experiment: Experiment,
    pub controller: ControllerKind,
    pub predictor: PredictorKind,
    pub mu: f64,
    pub f_t: f64,
    pub seed: u64,
    pub metrics: EpisodeMetrics,
}

impl TrialRow {
    pub fn flags(&self) -> String {
        let m = &self.metrics;
        let mut flags = Vec::new();
        if m.no_reset {
            flags.push("no_reset");
        }
        if m.aborted {
            flags.push("aborted");
        }
        if m.timed_out {
            flags.push("timeout");
        }
        flags.join("|")
    }
}

/// Descriptive statistics and paired tests of one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub experiment: Experiment,
    pub pair_a: ControllerKind,
    pub pair_b: ControllerKind,
    pub mu: f64,
    pub f_t: f64,
    pub metric: &'static str,
    pub mean_a: f64,
    pub sd_a: f64,
    pub mean_b: f64,
    pub sd_b: f64,
    /// Paired tests on a − b; NaN when degenerate.
    pub t: f64,
    pub p_t: f64,
    pub z: f64,
    pub p_w: f64,
    pub n: usize,
}

impl MetricSummary {
    fn new(
        spec: &ExperimentSpec,
        metric: &'static str,
        a: Vec<f64>,
        b: Vec<f64>,
    ) -> Result<Self, SimulationError> {
        let too_few = |e| SimulationError::InvalidConfig(format!("statistics: {e}"));
        let (mean_a, sd_a) = mean_sd(&a).map_err(too_few)?;
        let (mean_b, sd_b) = mean_sd(&b).map_err(too_few)?;
        let n = a.len();
        let sample = PairedSample::new(a, b).map_err(too_few)?;
        let (t, p_t) = paired_t_test(&sample).map_or((f64::NAN, f64::NAN), |r| (r.t, r.p));
        let (z, p_w) = wilcoxon_signed_rank(&sample).map_or((f64::NAN, f64::NAN), |r| (r.z, r.p));
        Ok(MetricSummary {
            experiment: spec.experiment,
            pair_a: spec.pair.0,
            pair_b: spec.pair.1,
            mu: spec.template.mu,
            f_t: spec.template.f_t,
            metric,
            mean_a,
            sd_a,
            mean_b,
            sd_b,
            t,
            p_t,
            z,
            p_w,
            n,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub rows_a: Vec<TrialRow>,
    pub rows_b: Vec<TrialRow>,
    /// Resets, then MDbR.
    pub summaries: Vec<MetricSummary>,
}

impl ExperimentResult {
    pub fn summary(&self, metric: &str) -> Option<&MetricSummary> {
        self.summaries.iter().find(|s| s.metric == metric)
    }
}

/// Runs both arms on the same seeds and compares them.
///
/// Trials run on the current rayon pool; results come back in trial order, so
/// the output does not depend on the thread count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, SimulationError> {
    if spec.trials < 2 {
        return Err(SimulationError::InvalidConfig(
            "trials must be at least 2".into(),
        ));
    }
    let (a, b) = spec.pair;
    let row = |controller: ControllerKind, trial: usize| -> Result<TrialRow, SimulationError> {
        let cfg = spec.config(controller, trial);
        let metrics = run_trial(&cfg)?;
        Ok(TrialRow {
            experiment: spec.experiment,
            controller,
            predictor: cfg.predictor,
            mu: spec.effective_mu(controller),
            f_t: cfg.f_t,
            seed: cfg.seed,
            metrics,
        })
    };
    let pairs: Vec<(TrialRow, TrialRow)> = (0..spec.trials)
        .into_par_iter()
        .flat_map_iter(|i| [(a, i), (b, i)])
        .map(|(c, i)| row(c, i))
        .collect::<Result<Vec<_>, _>>()?
        .chunks_exact(2)
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect();
    let (rows_a, rows_b): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();

    let resets = |rows: &[TrialRow]| {
        rows.iter()
            .map(|r| r.metrics.resets as f64)
            .collect::<Vec<_>>()
    };
    let mdbr = |rows: &[TrialRow]| rows.iter().map(|r| r.metrics.mdbr).collect::<Vec<_>>();
    let summaries = vec![
        MetricSummary::new(spec, "resets", resets(&rows_a), resets(&rows_b))?,
        MetricSummary::new(spec, "mdbr", mdbr(&rows_a), mdbr(&rows_b))?,
    ];
    Ok(ExperimentResult {
        spec: spec.clone(),
        rows_a,
        rows_b,
        summaries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Mu,
    Ft,
}

impl SweepParam {
    pub fn id(self) -> &'static str {
        match self {
            SweepParam::Mu => "mu",
            SweepParam::Ft => "f_t",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mu" => Ok(SweepParam::Mu),
            "f_t" | "ft" => Ok(SweepParam::Ft),
            other => Err(format!(
                "unknown sweep parameter `{other}` (expected mu or f_t)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub result: ExperimentResult,
}

/// Runs the experiment once per grid value of `param`.
pub fn sweep(
    param: SweepParam,
    grid: &[f64],
    base: &ExperimentSpec,
) -> Result<Vec<SweepPoint>, SimulationError> {
    if grid.is_empty() {
        return Err(SimulationError::InvalidConfig("sweep grid is empty".into()));
    }
    grid.iter()
        .map(|&value| {
            let mut spec = base.clone();
            match param {
                SweepParam::Mu => spec.template.mu = value,
                SweepParam::Ft => spec.template.f_t = value,
            }
            Ok(SweepPoint {
                value,
                result: run_experiment(&spec)?,
            })
        })
        .collect()
}

/// Column names of the per-trial CSV.
pub fn trial_header() -> [&'static str; 11] {
    [
        "experiment",
        "controller",
        "predictor",
        "mu",
        "f_t",
        "seed",
        "resets",
        "virtual_distance",
        "mdbr",
        "targets",
        "flags",
    ]
}

/// Column names of the summary CSV.
pub fn summary_header() -> [&'static str; 15] {
    [
        "experiment",
        "pair_a",
        "pair_b",
        "mu",
        "f_t",
        "metric",
        "mean_a",
        "sd_a",
        "mean_b",
        "sd_b",
        "t",
        "p_t",
        "z",
        "p_w",
        "n",
    ]
}

/// Column names of the sweep CSV: one row per grid value.
pub fn sweep_header() -> [&'static str; 16] {
    [
        "param",
        "value",
        "experiment",
        "pair_a",
        "pair_b",
        "n",
        "resets_mean_a",
        "resets_sd_a",
        "resets_mean_b",
        "resets_sd_b",
        "resets_p_w",
        "mdbr_mean_a",
        "mdbr_sd_a",
        "mdbr_mean_b",
        "mdbr_sd_b",
        "mdbr_p_w",
    ]
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x}")
    }
}

pub fn write_trials_csv<W: Write>(out: W, rows: &[TrialRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trial_header())?;
    for r in rows {
        w.write_record([
            r.experiment.id().to_string(),
            r.controller.id().to_string(),
            r.predictor.to_string(),
            num(r.mu),
            num(r.f_t),
            r.seed.to_string(),
            r.metrics.resets.to_string(),
            num(r.metrics.virtual_distance),
            num(r.metrics.mdbr),
            r.metrics.targets_collected.to_string(),
            r.flags(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: W, rows: &[MetricSummary]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(summary_header())?;
    for s in rows {
        w.write_record([
            s.experiment.id().to_string(),
            s.pair_a.id().to_string(),
            s.pair_b.id().to_string(),
            num(s.mu),
            num(s.f_t),
            s.metric.to_string(),
            num(s.mean_a),
            num(s.sd_a),
            num(s.mean_b),
            num(s.sd_b),
            num(s.t),
            num(s.p_t),
            num(s.z),
            num(s.p_w),
            s.n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(
    out: W,
    param: SweepParam,
    points: &[SweepPoint],
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sweep_header())?;
    for p in points {
        let r = &p.result;
        let mut record = vec![
            param.id().to_string(),
            num(p.value),
            r.spec.experiment.id().to_string(),
            r.spec.pair.0.id().to_string(),
            r.spec.pair.1.id().to_string(),
            r.spec.trials.to_string(),
        ];
        for metric in ["resets", "mdbr"] {
            let s = r.summary(metric).expect("both metrics are summarized");
            record.extend([
                num(s.mean_a),
                num(s.sd_a),
                num(s.mean_b),
                num(s.sd_b),
                num(s.p_w),
            ]);
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
