//! Pipeline stages. Each stage takes its inputs in memory and writes its
//! artifacts under the output directory; the `load_*` helpers read them back
//! for the standalone subcommands.

use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use quadhinf::fixtures::{ws_unit, Axis};
use quadhinf::hinf::{build_mixsyn_plant, gamma_iterate, reduce_and_check, rp_mu, rs_mu, MuCurve, SynthesisResult, SynthesisSpec};
use quadhinf::lti::{c2d_tustin, standard_grid, StateSpace, TimeSeries, TransferFunction};
use quadhinf::quadsim::{
    cascade_sim, run_comparison, write_metrics_csv, ComparisonRow, InnerLoop, Outer, Plant, QuadrotorParams,
};
use quadhinf::sysid::{
    assemble_report, enumerate_candidates, select_best_index, ExperimentRecord, IdentificationReport,
};
use quadhinf::uncertainty::{fit_weight, validate_weight, UncertainModel, UncertaintyProfile};
use quadhinf::Execution;

use crate::config::{ExperimentSource, ModelSource, PipelineConfig, SimPlant};
use crate::io::{read_json, write_json, write_with};

pub const IDENTIFICATION_JSON: &str = "identification.json";
pub const NOMINAL_JSON: &str = "nominal.json";
pub const POLE_HISTOGRAM_CSV: &str = "pole_histogram.csv";
pub const PROFILES_CSV: &str = "uncertainty_profiles.csv";
pub const WEIGHT_JSON: &str = "weight.json";
pub const SYNTHESIS_JSON: &str = "synthesis.json";
pub const CONTROLLERS_JSON: &str = "controllers.json";
pub const MU_RS_CSV: &str = "mu_rs.csv";
pub const MU_RP_CSV: &str = "mu_rp.csv";
pub const METRICS_CSV: &str = "metrics.csv";
pub const PLOT_SCRIPT: &str = "plot.gp";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Identify,
    Weight,
    Synth,
    Simulate,
    Analyze,
}

impl Stage {
    pub fn exit_code(self) -> u8 {
        match self {
            Stage::Config => 2,
            Stage::Identify => 3,
            Stage::Weight => 4,
            Stage::Synth => 5,
            Stage::Simulate => 6,
            Stage::Analyze => 7,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Identify => "identify",
            Stage::Weight => "weight",
            Stage::Synth => "synth",
            Stage::Simulate => "simulate",
            Stage::Analyze => "analyze",
        };
        f.write_str(s)
    }
}

#[derive(Debug)]
pub struct StageFailure {
    pub stage: Stage,
    pub error: anyhow::Error,
}

impl fmt::Display for StageFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {:#}", self.stage, self.error)
    }
}

impl std::error::Error for StageFailure {}

pub trait InStage<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, StageFailure>;
}

impl<T> InStage<T> for Result<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, StageFailure> {
        self.map_err(|error| StageFailure { stage, error })
    }
}

/// Shared run context.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: PipelineConfig,
    pub out_dir: PathBuf,
    pub exec: Execution,
}

impl RunContext {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

// ---------------------------------------------------------------- identify

pub fn load_records(ctx: &RunContext) -> Result<Vec<ExperimentRecord>> {
    match &ctx.config.experiments {
        ExperimentSource::Synthetic { save_records, .. } => {
            let suite = ctx.config.suite().expect("synthetic source");
            info!("generating {} {} experiments", suite.packages, suite.axis.name());
            let recs = suite.generate(&QuadrotorParams::default(), &InnerLoop::default(), ctx.exec)?;
            if *save_records {
                for (i, r) in recs.iter().enumerate() {
                    write_with(&ctx.path(&format!("records/record_{i:02}.csv")), |w| r.write_csv(w))?;
                }
            }
            Ok(recs)
        }
        ExperimentSource::Files { chirp, paths } => paths
            .iter()
            .map(|p| {
                let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
                ExperimentRecord::read_csv(chirp.clone(), BufReader::new(f))
                    .with_context(|| format!("reading {}", p.display()))
            })
            .collect(),
    }
}

pub fn identify(ctx: &RunContext, records: &[ExperimentRecord]) -> Result<IdentificationReport> {
    if records.len() < 2 {
        bail!("need at least two experiment records for a median nominal, got {}", records.len());
    }
    let opts = &ctx.config.identification;
    let candidates = ctx.exec.map(records, |r| enumerate_candidates(r, opts, Execution::Sequential));
    let failures: Vec<String> = candidates
        .iter()
        .enumerate()
        .filter_map(|(i, c)| select_best_index(c).err().map(|e| format!("record {i}: {e}")))
        .collect();
    if !failures.is_empty() {
        bail!("identification failed: {}", failures.join("; "));
    }
    let report = assemble_report(candidates)?;
    info!("nominal model {}", report.nominal);
    write_json(&ctx.path(IDENTIFICATION_JSON), &report)?;
    write_json(&ctx.path(NOMINAL_JSON), &report.nominal)?;
    write_with(&ctx.path(POLE_HISTOGRAM_CSV), |w| report.pole_histogram.write_csv(w))?;
    Ok(report)
}

pub fn load_identification(ctx: &RunContext) -> Result<IdentificationReport> {
    read_json(&ctx.path(IDENTIFICATION_JSON)).context("identification outputs missing; run `identify` first")
}

// ---------------------------------------------------------------- weight

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightArtifact {
    pub model: UncertainModel,
    pub worst_margin: f64,
}

pub fn weight(ctx: &RunContext, id: &IdentificationReport) -> Result<WeightArtifact> {
    let grid = standard_grid();
    let prof = UncertaintyProfile::compute(&id.selected, &id.nominal, &grid, ctx.exec)?;
    write_with(&ctx.path(PROFILES_CSV), |w| prof.write_csv(w))?;
    let wc = &ctx.config.weight;
    let w = fit_weight(&grid, &prof.envelope()?, wc.num_order, wc.den_order, wc.margin)?;
    let (ok, worst_margin) = validate_weight(&w, &prof)?;
    if !ok {
        bail!("weight validation failed: |W| below the envelope by {:.3e}", -worst_margin);
    }
    info!("uncertainty weight {w}");
    let model = UncertainModel::new(id.nominal.clone(), w, id.selected.clone(), &grid)?;
    let art = WeightArtifact { model, worst_margin };
    write_json(&ctx.path(WEIGHT_JSON), &art)?;
    Ok(art)
}

pub fn load_weight(ctx: &RunContext) -> Result<WeightArtifact> {
    read_json(&ctx.path(WEIGHT_JSON)).context("weight outputs missing; run `weight` first")
}

// ---------------------------------------------------------------- synth

/// Plant and multiplicative-uncertainty weight used for design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignModels {
    pub source: ModelSource,
    pub plant: TransferFunction,
    pub weight: TransferFunction,
}

pub fn design_models(ctx: &RunContext, weight: Option<&WeightArtifact>) -> Result<DesignModels> {
    let axis = ctx.config.axis;
    Ok(match ctx.config.synthesis.models {
        ModelSource::Fixture => DesignModels {
            source: ModelSource::Fixture,
            plant: axis.plant(),
            weight: axis.weight(),
        },
        ModelSource::Identified => {
            let owned;
            let w = match weight {
                Some(w) => w,
                None => {
                    owned = load_weight(ctx)?;
                    &owned
                }
            };
            DesignModels {
                source: ModelSource::Identified,
                plant: w.model.nominal.clone(),
                weight: w.model.weight.clone(),
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerSet {
    pub models: DesignModels,
    pub gamma: f64,
    pub continuous: TransferFunction,
    pub reduced: StateSpace,
    pub reduced_tf: TransferFunction,
    pub reduction_deviation: f64,
    pub fs: f64,
    pub discrete: StateSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuCurves {
    pub robust_stability: MuCurve,
    pub robust_performance: MuCurve,
}

pub fn synth(ctx: &RunContext, models: DesignModels) -> Result<(SynthesisResult, ControllerSet)> {
    let s = &ctx.config.synthesis;
    let spec = SynthesisSpec::new(
        models.plant.clone(),
        ws_unit(),
        TransferFunction::gain(s.wu),
        models.weight.clone(),
        ctx.config.a(),
    )?;
    let p = build_mixsyn_plant(&spec)?;
    let r = gamma_iterate(&p, s.gamma_lo, s.gamma_hi, s.tol)?;
    info!("gamma = {:.5}, controller order {}", r.gamma, r.order());
    let (reduced, dev) = reduce_and_check(&r, &models.plant.to_ss()?, s.reduce_to)?;
    let discrete = c2d_tustin(&reduced, s.fs)?;
    if !discrete.is_stable(0.0)? {
        bail!("discretized controller is unstable");
    }
    let set = ControllerSet {
        gamma: r.gamma,
        continuous: r.controller.clone(),
        reduced_tf: reduced.to_tf()?,
        reduced,
        reduction_deviation: dev,
        fs: s.fs,
        discrete,
        models,
    };
    write_json(&ctx.path(SYNTHESIS_JSON), &r)?;
    write_json(&ctx.path(CONTROLLERS_JSON), &set)?;
    Ok((r, set))
}

pub fn load_controllers(ctx: &RunContext) -> Result<ControllerSet> {
    read_json(&ctx.path(CONTROLLERS_JSON)).context("controller outputs missing; run `synth` first")
}

/// μ curves of the full-order loop.
pub fn analyze(ctx: &RunContext, set: &ControllerSet) -> Result<MuCurves> {
    let grid = standard_grid();
    let g = set.models.plant.to_ss()?;
    let c = set.continuous.to_ss()?;
    let ws = ws_unit().scale(ctx.config.a());
    let rs = rs_mu(&g, &c, &set.models.weight, &grid)?;
    let rp = rp_mu(&g, &c, &ws, &set.models.weight, &grid)?;
    info!("robust stability mu {:.4}, robust performance mu {:.4}", rs.sup, rp.sup);
    write_with(&ctx.path(MU_RS_CSV), |w| rs.write_csv(w))?;
    write_with(&ctx.path(MU_RP_CSV), |w| rp.write_csv(w))?;
    Ok(MuCurves {
        robust_stability: rs,
        robust_performance: rp,
    })
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub name: String,
    pub rows: Vec<ComparisonRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn outer_controllers(axis: Axis, set: &ControllerSet) -> Result<Vec<(String, Outer)>> {
    Ok(vec![
        ("hinf".to_string(), Outer::discrete(set.discrete.clone())?),
        ("pid".to_string(), Outer::Pid { gains: axis.pid() }),
    ])
}

/// Angle channels in degrees; motor-level command left as is.
pub fn to_degrees(ts: &TimeSeries) -> Result<TimeSeries> {
    let mut out = TimeSeries::new(ts.dt())?;
    for name in ts.names() {
        let v = ts.require(name)?;
        let v = if name == "inner_u" {
            v.to_vec()
        } else {
            v.iter().map(|x| x.to_degrees()).collect()
        };
        out.push_channel(name, v)?;
    }
    Ok(out)
}

pub fn simulate(ctx: &RunContext, set: &ControllerSet) -> Result<Vec<ScenarioOutcome>> {
    let cfg = &ctx.config;
    let ctrls = outer_controllers(cfg.axis, set)?;
    let runs = ctx.exec.map(&cfg.scenarios, |sc| {
        let scenario = sc.resolve(cfg.seed);
        let plant = match sc.plant {
            SimPlant::Nominal => Plant::Linear {
                model: set.models.plant.clone(),
            },
            SimPlant::Nonlinear => Plant::Nonlinear {
                params: QuadrotorParams::default(),
                inner: InnerLoop::default(),
                axis: cfg.axis,
            },
        };
        let series: quadhinf::Result<Vec<TimeSeries>> =
            ctrls.iter().map(|(_, c)| cascade_sim(c, &plant, &scenario)).collect();
        let rows = series.and_then(|s| run_comparison(&ctrls, &plant, &scenario).map(|r| (s, r)));
        (sc.name.clone(), rows)
    });
    let mut outcomes = Vec::new();
    let mut table = Vec::new();
    let mut plotted = Vec::new();
    for (name, res) in runs {
        match res {
            Ok((series, rows)) => {
                for ((cname, _), ts) in ctrls.iter().zip(&series) {
                    let file = format!("sim_{name}_{cname}.csv");
                    let deg = to_degrees(ts)?;
                    write_with(&ctx.path(&file), |w| deg.write_csv(w))?;
                    plotted.push((name.clone(), cname.clone(), file));
                }
                table.extend(rows.iter().map(|r| ComparisonRow {
                    name: format!("{name}/{}", r.name),
                    ..r.clone()
                }));
                outcomes.push(ScenarioOutcome {
                    name,
                    rows,
                    error: None,
                });
            }
            Err(e) => {
                warn!("scenario {name}: {e}");
                outcomes.push(ScenarioOutcome {
                    name,
                    rows: Vec::new(),
                    error: Some(e.to_string()),
                });
            }
        }
    }
    write_with(&ctx.path(METRICS_CSV), |w| write_metrics_csv(&table, w))?;
    crate::io::write_atomic(&ctx.path(PLOT_SCRIPT), plot_script(&plotted).as_bytes())?;
    Ok(outcomes)
}

/// gnuplot script drawing every simulated angle against its reference.
pub fn plot_script(files: &[(String, String, String)]) -> String {
    let mut s = String::from(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't [s]'\nset ylabel 'angle [deg]'\nset grid\n",
    );
    let mut scenarios: Vec<&str> = files.iter().map(|f| f.0.as_str()).collect();
    scenarios.dedup();
    for sc in scenarios {
        s.push_str(&format!("set title '{sc}'\nplot "));
        let mut first = true;
        for (_, ctrl, file) in files.iter().filter(|f| f.0 == sc) {
            if first {
                s.push_str(&format!("'{file}' using 1:'reference' with lines title 'reference', \\\n     "));
                first = false;
            } else {
                s.push_str(", \\\n     ");
            }
            s.push_str(&format!("'{file}' using 1:'angle' with lines title '{ctrl}'"));
        }
        s.push_str("\npause -1\n");
    }
    s
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| anyhow!("creating {}: {e}", dir.display()))
}
