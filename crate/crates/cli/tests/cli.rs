use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rdwsim::config::{parse_grid, Settings};
use rdwsim::render::render_svg;
use rdwsim::{resolve, CommonArgs};
use redirect_core::controllers::ControllerKind;
use redirect_core::environment::{build_physical_space, Experiment};
use redirect_core::geometry::Vec2;
use redirect_core::redirection::ResetEvent;
use redirect_core::simulation::{run_trial_observed, Trace, TrialConfig};

const TRIALS_HEADER: &str =
    "experiment,controller,predictor,mu,f_t,seed,resets,virtual_distance,mdbr,targets,flags";
const SUMMARY_HEADER: &str =
    "experiment,pair_a,pair_b,mu,f_t,metric,mean_a,sd_a,mean_b,sd_b,t,p_t,z,p_w,n";
const SWEEP_HEADER: &str = "param,value,experiment,pair_a,pair_b,n,resets_mean_a,resets_sd_a,resets_mean_b,resets_sd_b,resets_p_w,mdbr_mean_a,mdbr_sd_a,mdbr_mean_b,mdbr_sd_b,mdbr_p_w";

fn rdwsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdwsim"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn run_writes_the_documented_csv_schemas() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rdwsim(
        tmp.path(),
        &[
            "run",
            "--experiment",
            "all",
            "--pairs",
            "all",
            "--trials",
            "2",
            "--set",
            "episode.distance_budget=2",
            "--out",
            "res",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let trials = lines(&tmp.path().join("res/trials.csv"));
    assert_eq!(trials[0], TRIALS_HEADER);
    // 4 experiments x 4 pairs x 2 arms x 2 trials
    assert_eq!(trials.len(), 1 + 64);
    let summary = lines(&tmp.path().join("res/summary.csv"));
    assert_eq!(summary[0], SUMMARY_HEADER);
    // 4 x 4 comparisons, resets and mdbr each
    assert_eq!(summary.len(), 1 + 32);
    for row in &summary[1..] {
        assert_eq!(row.split(',').count(), 15);
    }
    for prefix in [
        "e1,s2c,f-s2c,0.5,1,resets,",
        "e2,tapf,f-tapf,0.7,1,mdbr,",
        "e4,arc,f-arc,0.5,1,resets,",
    ] {
        assert_eq!(
            summary.iter().filter(|r| r.starts_with(prefix)).count(),
            1,
            "{prefix}"
        );
    }
    assert!(summary[1..].iter().all(|r| r.ends_with(",2")));
}

#[test]
fn run_is_byte_reproducible_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let go = |threads: &str, out: &str| {
        let o = rdwsim(
            tmp.path(),
            &[
                "run",
                "--experiment",
                "e3",
                "--pairs",
                "tapf,arc",
                "--trials",
                "4",
                "--threads",
                threads,
                "--set",
                "episode.distance_budget=10",
                "--out",
                out,
            ],
        );
        assert!(o.status.success(), "{}", stderr(&o));
    };
    go("1", "a");
    go("3", "b");
    for f in ["trials.csv", "summary.csv"] {
        assert_eq!(
            fs::read(tmp.path().join("a").join(f)).unwrap(),
            fs::read(tmp.path().join("b").join(f)).unwrap()
        );
    }
}

#[test]
fn sweep_writes_one_row_per_grid_value() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rdwsim(
        tmp.path(),
        &[
            "sweep",
            "--param",
            "mu",
            "--grid",
            "0:1:0.1",
            "--controller",
            "f-tapf",
            "--experiment",
            "e4",
            "--trials",
            "2",
            "--set",
            "episode.distance_budget=2",
            "--out",
            "sw",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = lines(&tmp.path().join("sw/sweep.csv"));
    assert_eq!(rows[0], SWEEP_HEADER);
    assert_eq!(rows.len(), 1 + 11);
    let values: Vec<&str> = rows[1..]
        .iter()
        .map(|r| r.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(
        values,
        ["0", "0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9", "1"]
    );
    assert!(rows[1..]
        .iter()
        .all(|r| r.starts_with("mu,") && r.contains(",e4,tapf,f-tapf,2,")));
    assert_eq!(
        lines(&tmp.path().join("sw/sweep_summary.csv"))[0],
        SUMMARY_HEADER
    );
}

#[test]
fn validate_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("good.toml"),
        "experiments = [\"e1\", \"e4\"]\nmu = 0.6\n",
    )
    .unwrap();
    let o = rdwsim(
        tmp.path(),
        &["validate", "--config", "good.toml", "--out", "never"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let entries: Vec<_> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(entries, ["good.toml"]);
}

#[test]
fn config_errors_exit_with_one_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("mu = 1.5\n", "`mu`"),
        ("walker.body_radius = -1\n", "`walker.body_radius`"),
        ("[mpc]\ndepth = \"deep\"\n", "`mpc.depth`"),
        ("colour = 3\n", "unknown key `colour`"),
        ("trials = 1\n", "`trials`"),
    ];
    for (text, needle) in cases {
        fs::write(tmp.path().join("bad.toml"), text).unwrap();
        let o = rdwsim(tmp.path(), &["validate", "--config", "bad.toml"]);
        assert_eq!(o.status.code(), Some(1), "{text}");
        assert!(stderr(&o).contains(needle), "{text}: {}", stderr(&o));
    }
    let o = rdwsim(tmp.path(), &["run", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    let o = rdwsim(tmp.path(), &["validate", "--experiment", "e9"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("blocker"), "").unwrap();
    let o = rdwsim(
        tmp.path(),
        &[
            "run",
            "--experiment",
            "e2",
            "--pairs",
            "s2c",
            "--trials",
            "2",
            "--set",
            "episode.distance_budget=1",
            "--out",
            "blocker/res",
        ],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn defaults_resolve_per_controller() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("empty.toml"), "").unwrap();
    let args = CommonArgs {
        config: Some(tmp.path().join("empty.toml")),
        experiment: Some("e4".into()),
        pairs: Some("tapf".into()),
        ..CommonArgs::default()
    };
    let s = resolve(&args).unwrap();
    let specs = s.specs();
    assert_eq!(specs.len(), 1);
    let spec = &specs[0];
    assert_eq!(spec.pair, (ControllerKind::Tapf, ControllerKind::FTapf));
    assert_eq!(spec.template.mu, 0.7);
    assert_eq!(spec.template.f_t, 1.0);
    assert_eq!(spec.template.frame_rate, 60.0);
    assert_eq!(spec.trials, 100);
}

#[test]
fn flags_override_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("c.toml"),
        "mu = 0.3\ntrials = 7\nwalker.body_radius = 0.4\n[mpc]\ndepth = 3\n",
    )
    .unwrap();
    let args = CommonArgs {
        config: Some(tmp.path().join("c.toml")),
        mu: Some(0.6),
        set: vec!["mpc.depth=2".into()],
        ..CommonArgs::default()
    };
    let s = resolve(&args).unwrap();
    assert_eq!(s.mu, Some(0.6));
    assert_eq!(s.trials, 7);
    assert_eq!(s.template.walker.body_radius, 0.4);
    assert_eq!(s.template.controller_params.mpc.depth, 2);
}

#[test]
fn every_documented_key_is_accepted() {
    // the default of each key, written back, must parse
    for (key, _) in rdwsim::config::KEYS {
        let value = match *key {
            "experiments" | "pairs" => "\"all\"".to_string(),
            "predictor" => "\"oracle\"".to_string(),
            "out" => "\"results\"".to_string(),
            "sweep.param" => "\"mu\"".to_string(),
            "sweep.grid" => "\"0:1:0.5\"".to_string(),
            "arc.future_from_current" => "true".to_string(),
            k if k.ends_with("walls")
                || k == "trials"
                || k == "seed"
                || k == "threads"
                || k == "mpc.depth" =>
            {
                "3".into()
            }
            _ => "0.5".to_string(),
        };
        let mut s = Settings::default();
        s.apply_toml(&format!("{key} = {value}\n"), "test")
            .unwrap_or_else(|e| panic!("{key}: {e}"));
    }
}

#[test]
fn grids_parse_inclusively() {
    assert_eq!(
        parse_grid("g", "0:1:0.25").unwrap(),
        [0.0, 0.25, 0.5, 0.75, 1.0]
    );
    assert_eq!(parse_grid("g", "0.5,1,2").unwrap(), [0.5, 1.0, 2.0]);
    assert_eq!(parse_grid("g", "1:1:0.1").unwrap(), [1.0]);
    assert!(parse_grid("g", "1:0:0.1").is_err());
    assert!(parse_grid("g", "a,b").is_err());
}

fn e1_trace() -> Trace {
    let mut cfg = TrialConfig::new(Experiment::E1, ControllerKind::FTapf, 3);
    cfg.distance_budget = 30.0;
    let mut trace = Trace::new(4);
    run_trial_observed(&cfg, &mut trace).unwrap();
    trace
}

#[test]
fn svg_has_one_boundary_and_a_path() {
    let trace = e1_trace();
    let svg = render_svg(&build_physical_space(Experiment::E1), &trace, "e1", true);
    assert_eq!(svg.matches(r#"class="boundary""#).count(), 1);
    assert!(svg.matches("<polyline").count() >= 1);
    assert_eq!(svg.matches(r#"class="reset""#).count(), trace.resets.len());
    assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
}

#[test]
fn svg_is_deterministic() {
    let physical = build_physical_space(Experiment::E1);
    let a = render_svg(&physical, &e1_trace(), "e1", true);
    let b = render_svg(&physical, &e1_trace(), "e1", true);
    assert_eq!(a, b);

    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "render",
        "--experiment",
        "e3",
        "--controller",
        "arc",
        "--seed",
        "9",
        "--set",
        "episode.distance_budget=15",
    ];
    let mut outputs = Vec::new();
    for name in ["one.svg", "two.svg"] {
        let mut full = args.to_vec();
        full.extend(["--out", name]);
        let o = rdwsim(tmp.path(), &full);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(fs::read(tmp.path().join(name)).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn svg_marks_every_reset() {
    let physical = build_physical_space(Experiment::E2);
    let mut trace = Trace::new(1);
    for (i, p) in [(1.0, 4.4), (-4.4, 0.0), (2.0, -4.4)]
        .into_iter()
        .enumerate()
    {
        trace.resets.push(ResetEvent {
            time: i as f64,
            physical_position: Vec2::new(p.0, p.1),
            virtual_distance_at_event: i as f64,
        });
    }
    let svg = render_svg(&physical, &trace, "three resets", false);
    assert_eq!(svg.matches(r#"class="reset""#).count(), 3);
    assert_eq!(svg.matches(r#"class="boundary""#).count(), 1);
}
