use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ripless::ensembles::EnsembleSpec;
use ripless::harness::{
    certify_trials, csv_string, estimate_config, replay_trial, run, run_with_threads, sidecar_path, solve_report,
    write_outputs, EstimateGrid, ExperimentConfig, ProblemFile, SweepEvent,
};
use ripless::solvers::Program;

#[derive(Debug, Parser)]
#[command(name = "ripless", version, about = "Sparse recovery from random measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: the config's `output`, else `results`)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Re-execute one trial of a finished experiment
    Replay {
        /// Results CSV; its `.config.json` sidecar must sit next to it
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        cell: usize,
        #[arg(long)]
        trial: usize,
    },
    /// Solve one recovery problem from a JSON file
    Solve {
        #[arg(long)]
        program: Program,
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Build golfing-scheme dual certificates
    Certify {
        /// Ensemble JSON, inline or a path
        #[arg(long)]
        ensemble: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: usize,
        /// Total row budget, split across batches
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo check of a probability estimate over a grid
    Estimate {
        #[arg(long)]
        which: SweepEvent,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn execute(cmd: Command) -> ripless::Result<bool> {
    match cmd {
        Command::Run { config, out, threads } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let result = match threads {
                Some(k) => run_with_threads(&cfg, k)?,
                None => run(&cfg)?,
            };
            let dir = out.or_else(|| cfg.output.clone().map(PathBuf::from)).unwrap_or_else(|| "results".into());
            let paths = write_outputs(&result, &cfg, &dir)?;
            eprintln!("{} cells in {:.1}s -> {}", result.records.len(), result.wall_seconds, paths.csv.display());
            for f in &result.fits {
                eprintln!("slope of log error^2 vs log m ({} n={} s={} sigma={}): {:.3}", f.program, f.n, f.s, f.sigma, f.slope);
            }
            for r in result.records.iter().filter(|r| r.error.is_some()) {
                eprintln!("cell {} failed: {}", r.cell, r.error.as_deref().unwrap_or_default());
            }
            Ok(result.completed())
        }
        Command::Replay { result, cell, trial } => {
            let cfg = ExperimentConfig::from_path(&sidecar_path(&result))?;
            println!("{}", serde_json::to_string_pretty(&replay_trial(&cfg, cell, trial)?)?);
            Ok(true)
        }
        Command::Solve { program, problem, lambda, tol } => {
            let report = solve_report(ProblemFile::from_path(&problem)?, program, lambda, tol)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(true)
        }
        Command::Certify { ensemble, n, s, m, trials, seed } => {
            let spec = EnsembleSpec::from_arg(&ensemble)?;
            println!("{}", serde_json::to_string_pretty(&certify_trials(&spec, n, s, m, trials, seed)?)?);
            Ok(true)
        }
        Command::Estimate { which, grid, trials, seed } => {
            let grid: EstimateGrid = serde_json::from_str(&std::fs::read_to_string(&grid)?)?;
            let result = run(&estimate_config(which, grid, trials, seed)?)?;
            print!("{}", csv_string(&result)?);
            Ok(result.completed())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
