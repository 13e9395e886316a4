use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mrp_core::harness::{
    render_trajectory, render_trend, run_instance, run_sweep, write_results_to, DistKind, HarnessError,
    InstanceConfig, Scenario, SweepGrid, WeedSource,
};
use mrp_core::planners::PlannerKind;
use mrp_core::world::{MowerSpec, PastureSpec, WeedDistribution};

#[derive(Parser)]
#[command(name = "mrp", version, about = "Online mower routing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one planner on one instance and print its metrics as CSV.
    Run(RunArgs),
    /// Run every cell of a parameter grid and write CSV results.
    Sweep(SweepArgs),
    /// Draw a trend chart from a results CSV.
    Plot(PlotArgs),
}

const SCENARIO_FLAGS: [&str; 10] = [
    "length",
    "width",
    "turn_radius",
    "implement_width",
    "fov_depth",
    "fov_width",
    "ds",
    "n_weeds",
    "dist",
    "sigma",
];

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct RunArgs {
    #[arg(long, default_value = "JUMP_LOW")]
    planner: PlannerKind,
    #[arg(long = "L", default_value_t = 100.0)]
    length: f64,
    #[arg(long = "W", default_value_t = 40.0)]
    width: f64,
    #[arg(long = "R", default_value_t = 2.0)]
    turn_radius: f64,
    #[arg(long = "B", default_value_t = 2.0)]
    implement_width: f64,
    #[arg(long = "Sd", default_value_t = 12.0)]
    fov_depth: f64,
    #[arg(long = "Sw", default_value_t = 12.0)]
    fov_width: f64,
    /// Simulation step in metres.
    #[arg(long, default_value_t = 0.1)]
    ds: f64,
    #[arg(long, default_value_t = 20)]
    n_weeds: usize,
    #[arg(long, default_value = "uniform")]
    dist: DistKind,
    /// Cluster spread for `--dist gauss`.
    #[arg(long, default_value_t = WeedDistribution::DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the pasture, weeds and driven path here.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Take pasture, mower and weeds from this file instead of the flags.
    #[arg(long, conflicts_with_all = SCENARIO_FLAGS)]
    json_scenario: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Grid definition; omitted fields take their defaults.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Replicates per cell, overriding the grid file.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    x: String,
    #[arg(long, default_value = "pct_of_bcp")]
    y: String,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Usage(_) | HarnessError::Json(_) | HarnessError::Sim(_) => Failure::Usage(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

fn read_input(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let scenario = match &args.json_scenario {
        Some(path) => Scenario::from_json(&read_input(path)?)?,
        None => Scenario {
            pasture: PastureSpec::new(args.length, args.width),
            mower: MowerSpec {
                turn_radius: args.turn_radius,
                implement_width: args.implement_width,
                fov_depth: args.fov_depth,
                fov_width: args.fov_width,
                step: args.ds,
                ..MowerSpec::default()
            },
            weeds: WeedSource::Generate {
                n: args.n_weeds,
                dist: args.dist,
                sigma: args.sigma,
                seed: args.seed,
            },
        },
    };
    let pasture = scenario.pasture;
    let cfg = InstanceConfig {
        planner: args.planner,
        scenario,
        planner_seed: args.seed,
        record_trajectory: args.svg.is_some(),
    };
    let result = run_instance(&cfg)?;
    write_results_to(std::slice::from_ref(&result.metrics), std::io::stdout().lock())?;
    if let (Some(path), Some(episode)) = (&args.svg, &result.episode) {
        render_trajectory(episode, &pasture, path)?;
    }
    if !result.metrics.is_ok() {
        return Err(Failure::Run(result.metrics.message));
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut grid = match &args.grid {
        Some(path) => SweepGrid::from_json(&read_input(path)?)?,
        None => SweepGrid::default(),
    };
    if let Some(n) = args.seeds {
        grid.seeds_per_cell = n;
    }
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let out = run_sweep(&grid, &args.out, workers)?;
    eprintln!(
        "{} runs written to {} (summary {}, timings {})",
        out.rows.len(),
        out.results.display(),
        out.summary.display(),
        out.timings.display()
    );
    match out.failures() {
        0 => Ok(()),
        n => Err(Failure::Run(format!("{n} of {} runs failed; see the status column", out.rows.len()))),
    }
}

fn plot(args: PlotArgs) -> Result<(), Failure> {
    if !args.csv.is_file() {
        return Err(Failure::Usage(format!("no such file: {}", args.csv.display())));
    }
    render_trend(&args.csv, &args.x, &args.y, &args.out).map_err(|e| match e {
        HarnessError::Csv(_) => Failure::Usage(e.to_string()),
        other => other.into(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Plot(a) => plot(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
