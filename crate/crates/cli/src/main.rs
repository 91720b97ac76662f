mod commands;
mod config;
mod failure;
mod manifest;
mod output;
mod plot;

use bap_core::simulator::SolverKind;
use clap::{Args, Parser, Subcommand};
use output::Format;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "bap", version, about = "Box allocation experiments")]
pub struct Cli {
    /// Master seed; every subsystem derives its own stream from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for independent cells (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Exact solver time limit per solve, in seconds [default: 600].
    #[arg(long, global = true)]
    pub budget: Option<f64>,
    #[arg(long, global = true, env = "BAP_OUTPUT_DIR", default_value = "bap-out")]
    pub output_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate daily order books as instance JSON files.
    Generate(GenerateArgs),
    /// Allocate one day against the previous day's allocation.
    Solve(SolveArgs),
    /// Compare solvers over order quantities and repeats.
    Benchmark(BenchmarkArgs),
    /// Run a multi-day horizon scenario.
    Simulate(SimulateArgs),
    /// Write the day's MILP in fixed MPS format.
    ExportMilp(ExportArgs),
    /// Draw SVG charts from metrics and retrospective CSVs.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator config (JSON, or TOML by extension).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub orders: Option<usize>,
    /// Number of lead days, ending at LD3.
    #[arg(long, default_value_t = 16)]
    pub days: u32,
}

#[derive(Debug, Args)]
pub struct PrevArgs {
    /// Previous day's instance.
    #[arg(long, requires = "prev_allocation")]
    pub prev_instance: Option<PathBuf>,
    /// Previous day's allocation.
    #[arg(long, requires = "prev_instance")]
    pub prev_allocation: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[command(flatten)]
    pub prev: PrevArgs,
    #[arg(long, default_value = "exact")]
    pub solver: SolverKind,
    /// Starting allocation for exact, itps and tabu.
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
    /// Iteration count of itps or tabu.
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "10000")]
    pub orders_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "exact,greedy,itps,tabu")]
    pub solvers: Vec<SolverKind>,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Benchmark day k of LDk.
    #[arg(long, default_value_t = 11)]
    pub lead_day: u32,
    /// Exact time limit per warm-up day, in seconds.
    #[arg(long, default_value_t = 5.0)]
    pub warmup_budget: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario config (JSON, or TOML by extension); defaults apply without it.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Solvers to run over the same scenario, replacing the scenario's solver.
    #[arg(long, value_delimiter = ',')]
    pub solvers: Vec<SolverKind>,
    #[arg(long)]
    pub orders: Option<usize>,
    /// Also draw SVG charts.
    #[arg(long)]
    pub plots: bool,
    /// Also write every day's allocation.
    #[arg(long)]
    pub save_allocations: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[command(flatten)]
    pub prev: PrevArgs,
    /// File name inside the output directory.
    #[arg(long, default_value = "model.mps")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long)]
    pub retrospective: Option<PathBuf>,
    #[arg(long, default_value = "WMAPE by lead day")]
    pub title: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
