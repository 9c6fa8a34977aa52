use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use coexplore::bench::{cmd_bench, cmd_report, cmd_run, BenchError, BenchOptions, RunOptions};
use coexplore::strategies::StrategyId;
use coexplore::worlds::{generate_maze, generate_office, generate_open};

const EXIT_CONFIG: u8 = 2;
const EXIT_DNF: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "coexplore", version, about = "Multi-robot frontier exploration simulator and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutDir {
    /// Output directory.
    #[arg(long, env = "COEXPLORE_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run and write metrics.csv, replans.csv, summary.json and snapshot.pgm.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Defaults to the first strategy listed in the scenario.
        #[arg(long)]
        strategy: Option<StrategyId>,
        /// Defaults to the first robot count listed in the scenario.
        #[arg(long)]
        robots: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated seconds before the run is declared unfinished.
        #[arg(long)]
        max_time: Option<f64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Execute seeded batches and write per-run artifacts plus report.csv and report.json.
    Bench {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated; defaults to the scenario's list.
        #[arg(long, value_delimiter = ',')]
        strategy: Vec<StrategyId>,
        /// Comma-separated robot counts; defaults to the scenario's list.
        #[arg(long, value_delimiter = ',')]
        robots: Vec<usize>,
        #[arg(long)]
        runs: Option<usize>,
        /// Base seed; run i uses seed + i.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_time: Option<f64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Rebuild the report from the summaries under a batch directory.
    Report {
        #[command(flatten)]
        out: OutDir,
    },
    /// Write a generated world in the text map format.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        corridor_width: usize,
        #[arg(long, default_value_t = 6)]
        room_min: usize,
        #[arg(long, default_value_t = 12)]
        room_max: usize,
        #[arg(long, default_value_t = 2)]
        door_width: usize,
        #[arg(long, default_value_t = 25)]
        obstacle_count: usize,
        #[arg(long, default_value_t = 3)]
        obstacle_size: usize,
        /// Map file to write; prints to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Maze,
    Office,
    Open,
}

fn fail(err: &BenchError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(if err.is_config() { EXIT_CONFIG } else { EXIT_IO })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, strategy, robots, seed, max_time, out } => {
            let opts = RunOptions { strategy, robots, seed, max_time };
            match cmd_run(&scenario, &opts, &out.out) {
                Ok(s) => {
                    let spread = s.distance_spread;
                    match s.exploration_time {
                        Some(t) => println!(
                            "{} robots={} finished t={t:.1}s coverage={:.4} spread={spread:.2}m",
                            s.strategy, s.robots, s.final_coverage
                        ),
                        None => println!(
                            "{} robots={} did not finish by t={:.1}s coverage={:.4}",
                            s.strategy, s.robots, s.end_time, s.final_coverage
                        ),
                    }
                    if s.finished {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_DNF)
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Bench { scenario, strategy, robots, runs, seed, max_time, out } => {
            let opts = BenchOptions { strategies: strategy, robots, runs, seed, max_time };
            match cmd_bench(&scenario, &opts, &out.out) {
                Ok(report) => {
                    print!("{}", report.to_table());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Report { out } => match cmd_report(&out.out) {
            Ok(report) => {
                print!("{}", report.to_table());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Generate {
            kind,
            width,
            height,
            seed,
            corridor_width,
            room_min,
            room_max,
            door_width,
            obstacle_count,
            obstacle_size,
            out,
        } => {
            let world = match kind {
                Kind::Maze => generate_maze(width.unwrap_or(41), height.unwrap_or(41), corridor_width, seed),
                Kind::Office => generate_office(
                    width.unwrap_or(61),
                    height.unwrap_or(61),
                    room_min,
                    room_max,
                    door_width,
                    seed,
                ),
                Kind::Open => {
                    generate_open(width.unwrap_or(60), height.unwrap_or(60), obstacle_count, obstacle_size, seed)
                }
            };
            let world = match world {
                Ok(w) => w,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let text = world.to_text();
            match out {
                None => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Some(path) => match std::fs::write(&path, text).with_context(|| format!("writing {}", path.display())) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => {
                        eprintln!("error: {e:#}");
                        ExitCode::from(EXIT_IO)
                    }
                },
            }
        }
    }
}
