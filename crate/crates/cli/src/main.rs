//! Experiment runner: executes the controller/hardware co-design studies and
//! writes their tables and figures as CSV (canonical) and SVG (optional).

mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use codesign_core::config::CaseStudy;
use codesign_core::{Error, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "codesign",
    about = "Pareto-front exploration of MPC controller/hardware co-designs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the processor case study (objectives: settling performance, solve time).
    RunCpu(RunArgs),
    /// Run the FPGA case study (objectives: settling performance, resource usage).
    RunFpga(RunArgs),
    /// Compare two finished run directories under a joint reference point.
    Compare(CompareArgs),
    /// Summarize a finished run directory as text.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file; defaults to the bundled config for the case study.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Evaluation budget per run (overrides the config).
    #[arg(long)]
    budget: Option<usize>,
    /// Seed(s) to run (repeatable; overrides the config's seed list).
    #[arg(long)]
    seed: Vec<u64>,
    /// Restrict to one algorithm; default runs both.
    #[arg(long, value_parser = ["bimads", "lhs"])]
    algo: Option<String>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Also emit SVG figures (front scatter, hypervolume profiles).
    #[arg(long)]
    svg: bool,
    /// Time the solver on this machine instead of the flop-count model.
    /// Non-deterministic; CPU study only.
    #[arg(long)]
    wallclock_timing: bool,
    /// Dump the condensed QP and discretized model of the best design to CSV.
    #[arg(long)]
    dump_matrices: bool,
    /// Export closed-loop trajectories of the best design to CSV.
    #[arg(long)]
    export_trajectories: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// First run directory (as produced by run-cpu/run-fpga).
    run_a: PathBuf,
    /// Second run directory; must be the same case study.
    run_b: PathBuf,
    /// Where to write comparison.csv; defaults to stdout summary only.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory to summarize.
    run_dir: PathBuf,
}

/// Exit codes: 0 success, 1 config/usage error, 2 infeasible design space,
/// 3 internal numerical failure.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Io(_) | Error::InvalidModel(_) => 1,
        Error::InfeasibleSpace(_) => 2,
        Error::Numerical(_) | Error::Domain(_) => 3,
    }
}

fn load_config(path: &Option<PathBuf>, case: CaseStudy) -> codesign_core::Result<ExperimentConfig> {
    let cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                Error::Config(format!("cannot read config {}: {e}", p.display()))
            })?;
            ExperimentConfig::from_toml_str(&text)?
        }
        None => match case {
            CaseStudy::Cpu => ExperimentConfig::default_cpu(),
            CaseStudy::Fpga => ExperimentConfig::default_fpga(),
        },
    };
    if cfg.case_study != case {
        return Err(Error::Config(format!(
            "config is for the {} study but the subcommand runs the {case} study",
            cfg.case_study
        )));
    }
    Ok(cfg)
}

fn run(args: &RunArgs, case: CaseStudy) -> codesign_core::Result<()> {
    let mut cfg = load_config(&args.config, case)?;
    if let Some(b) = args.budget {
        cfg.budget = b;
    }
    if !args.seed.is_empty() {
        cfg.seeds = args.seed.clone();
    }
    cfg.validate()?;
    if args.wallclock_timing && case != CaseStudy::Cpu {
        return Err(Error::Config(
            "--wallclock-timing applies only to the cpu study".into(),
        ));
    }
    let algos = match args.algo.as_deref() {
        Some(s) => vec![s.parse()?],
        None => vec![
            codesign_core::Algorithm::BiMads,
            codesign_core::Algorithm::Lhs,
        ],
    };
    output::execute_run(&cfg, &algos, args)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::RunCpu(args) => run(args, CaseStudy::Cpu),
        Command::RunFpga(args) => run(args, CaseStudy::Fpga),
        Command::Compare(args) => output::compare_runs(&args.run_a, &args.run_b, args.out.as_deref()),
        Command::Report(args) => output::report_run(&args.run_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
