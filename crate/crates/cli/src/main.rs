use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use quadhinf::fixtures::Axis;
use quadhinf::Execution;
use quadhinf_cli::config::{Overrides, PipelineConfig};
use quadhinf_cli::stages::{InStage, RunContext, Stage, StageFailure};
use quadhinf_cli::*;

#[derive(Parser, Debug)]
#[command(version, about = "Quadrotor attitude identification and robust H-infinity design")]
struct Cli {
    /// Pipeline configuration (JSON). Defaults for `--axis` when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Axis used when no configuration file is given.
    #[arg(long, global = true, default_value = "pitch")]
    axis: Axis,
    /// Directory receiving every artifact
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run every stage on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Log more (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct SynthArgs {
    /// Sensitivity weight scale.
    #[arg(long)]
    a: Option<f64>,
    /// Constant control-effort weight.
    #[arg(long)]
    wu: Option<f64>,
    /// Upper end of the γ bisection
    #[arg(long)]
    gamma_hi: Option<f64>,
    /// Relative bisection tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Target order of the reduced controller
    #[arg(long)]
    reduce_to: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate or read experiments and identify the attitude loop.
    Identify,
    /// Fit the multiplicative uncertainty weight to identified models.
    Weight,
    /// Mixed-sensitivity synthesis, reduction and discretization.
    Synth(SynthArgs),
    /// Run the configured scenarios with the H∞ and PID outer loops.
    Simulate,
    /// Every stage in order, plus the run report.
    Pipeline(SynthArgs),
    /// Robust stability and performance μ curves of the synthesized loop.
    Analyze(SynthArgs),
}

fn run(cli: Cli) -> Result<(), StageFailure> {
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::load(p).stage(Stage::Config)?,
        None => PipelineConfig::for_axis(cli.axis),
    };
    let s = match &cli.command {
        Command::Synth(s) | Command::Pipeline(s) | Command::Analyze(s) => s,
        _ => &SynthArgs::default(),
    };
    config.apply(&Overrides {
        seed: cli.seed,
        a: s.a,
        wu: s.wu,
        gamma_hi: s.gamma_hi,
        tol: s.tol,
        reduce_to: s.reduce_to,
    });
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let ctx = RunContext::new(config, &cli.out_dir, exec)?;
    match cli.command {
        Command::Identify => {
            let r = cmd_identify(&ctx)?;
            println!("nominal: {}", r.nominal);
        }
        Command::Weight => {
            let w = cmd_weight(&ctx)?;
            println!("weight: {} (margin {:.3e})", w.model.weight, w.worst_margin);
        }
        Command::Synth(_) => {
            let c = cmd_synth(&ctx)?;
            println!(
                "gamma {:.5}; reduced to order {} (deviation {:.4})",
                c.gamma,
                c.reduced.order(),
                c.reduction_deviation
            );
        }
        Command::Analyze(_) => {
            let m = cmd_analyze(&ctx)?;
            println!("mu RS {:.4}, RP {:.4}", m.robust_stability.sup, m.robust_performance.sup);
        }
        Command::Simulate => {
            let out = cmd_simulate(&ctx)?;
            report_scenarios(&out)?;
        }
        Command::Pipeline(_) => {
            let r = cmd_pipeline(&ctx)?;
            print!("{}", r.summary());
            report_scenarios(&r.comparison)?;
        }
    }
    Ok(())
}

fn report_scenarios(out: &[stages::ScenarioOutcome]) -> Result<(), StageFailure> {
    let failed: Vec<String> = out
        .iter()
        .filter_map(|o| o.error.as_ref().map(|e| format!("{}: {e}", o.name)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(StageFailure {
            stage: Stage::Simulate,
            error: anyhow::anyhow!("scenarios failed: {}", failed.join("; ")),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error {e}");
            ExitCode::from(e.stage.exit_code())
        }
    }
}
