//! Benchmark command line: runs experiment configs, parameter sweeps, and
//! distribution-accuracy studies, writing CSV results.
//!
//! Exit codes: 0 full success, 1 usage or configuration error, 2 completed
//! with partial results (some axis values failed and were withheld).
//! Log verbosity comes from `RUST_LOG` (default `warn`).

use clap::{Args, Parser, Subcommand};
use disprod::harness::{
    default_depth, episodes_csv, parse_config, results_csv, run_distribution_study,
    run_experiment, ExperimentSpec, MetricsRow, StudySpec, Sweep, SweepAxis,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "disprod", version, about = "Planning benchmark harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment config and write results.csv / episodes.csv.
    Run(RunArgs),
    /// Run a config with the sweep axis and values overridden.
    Sweep(SweepArgs),
    /// Compare propagated marginals against Monte Carlo rollouts.
    Study(StudyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (TOML).
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Swept parameter: alpha, depth, beta, n_redundant, or restarts.
    #[arg(long)]
    axis: String,
    /// Comma-separated values for the axis.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
}

#[derive(Args)]
struct StudyArgs {
    /// Environment: simple_env or pendulum.
    #[arg(long, default_value = "simple_env")]
    env: String,
    /// Comma-separated noise scales.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.25")]
    alphas: Vec<f64>,
    /// Rollout depth; defaults to the environment's planning depth.
    #[arg(long)]
    depth: Option<usize>,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; usage mistakes are
            // configuration errors (exit 1), not partial results (exit 2).
            let help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if help {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            };
        }
    };
    let result = match cli.cmd {
        Cmd::Run(args) => run_cmd(args, None),
        Cmd::Sweep(args) => {
            let axis = match parse_axis(&args.axis) {
                Ok(a) => a,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return ExitCode::FAILURE;
                }
            };
            run_cmd(
                args.run,
                Some(Sweep {
                    axis,
                    values: args.values,
                }),
            )
        }
        Cmd::Study(args) => study_cmd(args),
    };
    match result {
        Ok(partial) => {
            if partial {
                eprintln!("warning: partial results (some axis values failed; see log)");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    match s {
        "alpha" => Ok(SweepAxis::Alpha),
        "depth" => Ok(SweepAxis::Depth),
        "beta" => Ok(SweepAxis::Beta),
        "n_redundant" => Ok(SweepAxis::NRedundant),
        "restarts" => Ok(SweepAxis::Restarts),
        "none" => Ok(SweepAxis::None),
        other => Err(format!(
            "unknown sweep axis {other:?}; expected alpha, depth, beta, n_redundant, restarts, or none"
        )),
    }
}

fn run_cmd(args: RunArgs, sweep_override: Option<Sweep>) -> Result<bool, String> {
    let mut spec: ExperimentSpec = parse_config(&args.config).map_err(|e| e.to_string())?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(sweep) = sweep_override {
        spec.sweep = if sweep.axis == SweepAxis::None {
            None
        } else {
            Some(sweep)
        };
    }
    let out = run_experiment(&spec).map_err(|e| e.to_string())?;
    write_file(&args.out, "results.csv", &results_csv(&out.rows))?;
    write_file(&args.out, "episodes.csv", &episodes_csv(&out.episodes))?;
    print_rows(&out.rows);
    println!(
        "wrote {} and {}",
        args.out.join("results.csv").display(),
        args.out.join("episodes.csv").display()
    );
    Ok(out.partial)
}

fn study_cmd(args: StudyArgs) -> Result<bool, String> {
    let spec = StudySpec {
        env: args.env.clone(),
        alphas: args.alphas,
        depth: args.depth.unwrap_or_else(|| default_depth(&args.env)),
        n_samples: args.samples,
        seed: args.seed,
    };
    let (rows, csv) = run_distribution_study(&spec).map_err(|e| e.to_string())?;
    write_file(&args.out, "study.csv", &csv)?;
    println!(
        "wrote {} ({} rows)",
        args.out.join("study.csv").display(),
        rows.len()
    );
    Ok(false)
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| format!("write {}: {e}", path.display()))
}

fn print_rows(rows: &[MetricsRow]) {
    println!(
        "{:<12} {:<12} {:>8} {:>12} {:>10} {:>7} {:>7} {:>10}",
        "planner", "axis", "value", "mean_return", "std", "sr", "sl", "mean_steps"
    );
    for r in rows {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<12} {:<12} {:>8} {:>12.3} {:>10.3} {:>7} {:>7} {:>10.1}",
            r.planner,
            r.axis,
            cell(r.value),
            r.mean_return,
            r.std_return,
            cell(r.sr),
            cell(r.sl),
            r.mean_steps
        );
    }
}
