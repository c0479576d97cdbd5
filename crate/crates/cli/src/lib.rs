//! Pipeline orchestration: experiments, identification, uncertainty weight,
//! H∞ synthesis, simulation and the combined run report.

pub mod config;
pub mod io;
pub mod report;
pub mod stages;

use std::path::Path;

use log::info;

use config::PipelineConfig;
use quadhinf::Execution;
use report::{Provenance, RunReport, REPORT_JSON, SUMMARY_TXT};
use stages::{InStage, RunContext, Stage, StageFailure};

pub type StageResult<T> = std::result::Result<T, StageFailure>;

impl RunContext {
    pub fn new(config: PipelineConfig, out_dir: &Path, exec: Execution) -> StageResult<Self> {
        config.validate().stage(Stage::Config)?;
        stages::ensure_dir(out_dir).stage(Stage::Config)?;
        Ok(RunContext {
            config,
            out_dir: out_dir.to_path_buf(),
            exec,
        })
    }
}

pub fn cmd_identify(ctx: &RunContext) -> StageResult<quadhinf::sysid::IdentificationReport> {
    let recs = stages::load_records(ctx).stage(Stage::Identify)?;
    stages::identify(ctx, &recs).stage(Stage::Identify)
}

pub fn cmd_weight(ctx: &RunContext) -> StageResult<stages::WeightArtifact> {
    let id = stages::load_identification(ctx).stage(Stage::Weight)?;
    stages::weight(ctx, &id).stage(Stage::Weight)
}

pub fn cmd_synth(ctx: &RunContext) -> StageResult<stages::ControllerSet> {
    let models = stages::design_models(ctx, None).stage(Stage::Synth)?;
    let (_, set) = stages::synth(ctx, models).stage(Stage::Synth)?;
    stages::analyze(ctx, &set).stage(Stage::Synth)?;
    Ok(set)
}

pub fn cmd_analyze(ctx: &RunContext) -> StageResult<stages::MuCurves> {
    let set = stages::load_controllers(ctx).stage(Stage::Analyze)?;
    stages::analyze(ctx, &set).stage(Stage::Analyze)
}

pub fn cmd_simulate(ctx: &RunContext) -> StageResult<Vec<stages::ScenarioOutcome>> {
    let set = stages::load_controllers(ctx).stage(Stage::Simulate)?;
    stages::simulate(ctx, &set).stage(Stage::Simulate)
}

/// All stages in order; stops at the first failure.
pub fn cmd_pipeline(ctx: &RunContext) -> StageResult<RunReport> {
    let provenance = Provenance::of(&ctx.config).stage(Stage::Config)?;
    let identification = cmd_identify(ctx)?;
    info!("identification done");
    let uncertainty = stages::weight(ctx, &identification).stage(Stage::Weight)?;
    info!("weight done");
    let models = stages::design_models(ctx, Some(&uncertainty)).stage(Stage::Synth)?;
    let (synthesis, controllers) = stages::synth(ctx, models).stage(Stage::Synth)?;
    let mu = stages::analyze(ctx, &controllers).stage(Stage::Synth)?;
    info!("synthesis done");
    let comparison = stages::simulate(ctx, &controllers).stage(Stage::Simulate)?;
    let report = RunReport {
        provenance,
        config: ctx.config.clone(),
        identification,
        uncertainty,
        synthesis,
        controllers,
        mu,
        comparison,
    };
    io::write_json(&ctx.path(REPORT_JSON), &report).stage(Stage::Simulate)?;
    io::write_atomic(&ctx.path(SUMMARY_TXT), report.summary().as_bytes()).stage(Stage::Simulate)?;
    Ok(report)
}
