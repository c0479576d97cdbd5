use std::fs;
use std::path::Path;
use std::process::Command;

use quadhinf::fixtures::Axis;
use quadhinf::lti::standard_grid;
use quadhinf::Execution;
use quadhinf_cli::config::{ExperimentSource, ModelSource, PipelineConfig};
use quadhinf_cli::report::config_hash;
use quadhinf_cli::stages::{self, RunContext, Stage};
use quadhinf_cli::{cmd_identify, cmd_pipeline, cmd_simulate, cmd_synth};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quadhinf-cli"))
}

fn small(axis: Axis) -> PipelineConfig {
    let mut c = PipelineConfig::for_axis(axis);
    c.experiments = ExperimentSource::Synthetic {
        packages: Some(3),
        noise: None,
        jitter: None,
        save_records: false,
    };
    c
}

fn ctx(cfg: PipelineConfig, dir: &Path) -> RunContext {
    RunContext::new(cfg, dir, Execution::Parallel).unwrap()
}

#[test]
fn exit_codes_follow_stages() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["simulate", "--out-dir"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(Stage::Simulate.exit_code() as i32));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[simulate]"));

    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"axis": "pitch", "unknown": 1}"#).unwrap();
    let out = bin().args(["pipeline", "--config"]).arg(&cfg).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .args(["synth", "--gamma-hi", "0.5", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("upper gamma bound"));

    let out = bin().args(["synth", "--reduce-to", "8", "--out-dir"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let set = stages::load_controllers(&ctx(PipelineConfig::for_axis(Axis::Pitch), dir.path())).unwrap();
    assert_eq!(set.reduced.order(), 8);
    assert_eq!(set.reduction_deviation, 0.0);
    assert!(set.discrete.is_stable(0.0).unwrap());
}

#[test]
fn missing_experiment_files_fail_at_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"axis": "pitch", "experiments": {"kind": "files",
            "chirp": {"f0": 0.05, "f1": 5, "amplitude": 8, "duration": 40, "fs": 500},
            "paths": ["a.csv", "b.csv"]}}"#,
    )
    .unwrap();
    let out = bin().args(["identify", "--config"]).arg(&cfg).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));
}

#[test]
fn recorded_files_reproduce_synthetic_identification() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Axis::Pitch);
    cfg.experiments = ExperimentSource::Synthetic {
        packages: Some(3),
        noise: None,
        jitter: None,
        save_records: true,
    };
    let a = cmd_identify(&ctx(cfg.clone(), dir.path())).unwrap();
    let suite = cfg.suite().unwrap();
    let plan = suite.plan(&Default::default());
    // records carry their own amplitude; identification only needs fs
    let paths: Vec<_> = (0..3).map(|i| dir.path().join(format!("records/record_{i:02}.csv"))).collect();
    let chirp = quadhinf::sysid::ChirpConfig::new(suite.f0, suite.f1, plan[0].1, suite.sweep, suite.fs)
        .with_periods(suite.periods);
    let mut files = small(Axis::Pitch);
    files.experiments = ExperimentSource::Files {
        chirp: chirp.clone(),
        paths: paths.clone(),
    };
    let b_dir = tempfile::tempdir().unwrap();
    let b = cmd_identify(&ctx(files, b_dir.path())).unwrap();
    assert_eq!(a.selected_index, b.selected_index);
    for (x, y) in a.nominal.den().coeffs().iter().zip(b.nominal.den().coeffs()) {
        assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0), "{x} vs {y}");
    }

    let mut one = small(Axis::Pitch);
    one.experiments = ExperimentSource::Files {
        chirp,
        paths: paths[..1].to_vec(),
    };
    assert!(one.validate().is_err());
    let recs = vec![quadhinf::sysid::ExperimentRecord::read_csv(
        one_chirp(&one),
        std::io::BufReader::new(fs::File::open(&paths[0]).unwrap()),
    )
    .unwrap()];
    let c = RunContext {
        config: small(Axis::Pitch),
        out_dir: b_dir.path().to_path_buf(),
        exec: Execution::Sequential,
    };
    assert!(stages::identify(&c, &recs).unwrap_err().to_string().contains("at least two"));
}

fn one_chirp(c: &PipelineConfig) -> quadhinf::sysid::ChirpConfig {
    match &c.experiments {
        ExperimentSource::Files { chirp, .. } => chirp.clone(),
        _ => unreachable!(),
    }
}

#[test]
fn weight_stage_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let c = ctx(small(Axis::Pitch), dir.path());
    let id = cmd_identify(&c).unwrap();

    let mut degenerate = id.clone();
    degenerate.selected = vec![id.nominal.clone(); 3];
    let w = stages::weight(&c, &degenerate).unwrap();
    let peak = w
        .model
        .weight
        .freq_response(&standard_grid())
        .unwrap()
        .magnitudes()
        .into_iter()
        .fold(0.0, f64::max);
    assert!(peak < 1e-9, "{peak}");

    let mut tight = small(Axis::Pitch);
    tight.weight.margin = 1.0;
    let w0 = stages::weight(&ctx(tight, dir.path()), &id).unwrap();
    let w2 = stages::weight(&c, &id).unwrap();
    for &om in &standard_grid() {
        let r = w2.model.weight.eval_freq(om).unwrap().norm() / w0.model.weight.eval_freq(om).unwrap().norm();
        assert!((1.0..=1.02 + 1e-9).contains(&r), "{om}: {r}");
    }
    assert!(w0.worst_margin >= 0.0);
}

#[test]
fn identified_models_feed_synthesis() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Axis::Roll);
    cfg.synthesis.models = ModelSource::Identified;
    cfg.scenarios.clear();
    let c = ctx(cfg, dir.path());
    assert!(cmd_synth(&c).is_err());
    let report = cmd_pipeline(&c).unwrap();
    assert_eq!(report.controllers.models.plant, report.identification.nominal);
    assert!(report.synthesis.gamma < 1.1);
    assert!(report.comparison.is_empty());
    let table = fs::read_to_string(dir.path().join(stages::METRICS_CSV)).unwrap();
    assert_eq!(table, "name,overshoot,settling,recovery,effort_peak\n");
}

#[test]
fn diverging_scenario_does_not_stop_others() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Axis::Pitch);
    cfg.scenarios = serde_json::from_str(
        r#"[{"name": "huge", "plant": "nonlinear", "scenario": {
              "reference": {"kind": "step", "amplitude": 3.0, "time": 0.0},
              "duration": 2.0, "dt": 0.001}},
            {"name": "ok"}]"#,
    )
    .unwrap();
    let c = ctx(cfg, dir.path());
    cmd_synth(&c).unwrap();
    let out = cmd_simulate(&c).unwrap();
    assert!(out[0].error.is_some());
    assert!(out[1].error.is_none() && out[1].rows.len() == 2);
    assert!(dir.path().join("sim_ok_hinf.csv").is_file());
    assert!(!dir.path().join("sim_huge_hinf.csv").exists());
}

#[test]
fn simulation_output_in_degrees() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Axis::Pitch);
    cfg.scenarios = serde_json::from_str(
        r#"[{"name": "deg", "scenario": {
              "reference": {"kind": "step", "amplitude": 0.0174532925199433, "time": 0.0},
              "duration": 1.0, "dt": 0.001}}]"#,
    )
    .unwrap();
    let c = ctx(cfg, dir.path());
    cmd_synth(&c).unwrap();
    cmd_simulate(&c).unwrap();
    let ts = quadhinf::lti::TimeSeries::read_csv(std::io::BufReader::new(
        fs::File::open(dir.path().join("sim_deg_pid.csv")).unwrap(),
    ))
    .unwrap();
    let r = ts.require("reference").unwrap();
    assert!((r[10] - 1.0).abs() < 1e-9);
    let script = fs::read_to_string(dir.path().join(stages::PLOT_SCRIPT)).unwrap();
    assert!(script.contains("sim_deg_hinf.csv") && script.contains("sim_deg_pid.csv"));
}

#[test]
fn provenance_hash_tracks_every_field() {
    let base = PipelineConfig::for_axis(Axis::Pitch);
    let h = config_hash(&base).unwrap();
    assert_eq!(h, config_hash(&base.clone()).unwrap());
    let mut variants = Vec::new();
    let mut c = base.clone();
    c.seed += 1;
    variants.push(c);
    let mut c = base.clone();
    c.synthesis.wu = 0.051;
    variants.push(c);
    let mut c = base.clone();
    c.weight.margin = 1.03;
    variants.push(c);
    let mut c = base.clone();
    c.identification.n_avg = 3;
    variants.push(c);
    let mut c = base.clone();
    c.scenarios[0].name = "other".into();
    variants.push(c);
    let mut c = base.clone();
    c.synthesis.a = Some(0.88);
    variants.push(c);
    for v in variants {
        assert_ne!(config_hash(&v).unwrap(), h, "{v:?}");
    }
}
