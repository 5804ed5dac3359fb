use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thresholding_bandit::harness::{
    complexity_report, curve_csv, curve_sweep, records_csv, run_experiment, summaries_csv,
    table1_configs, threshold_grid, ExperimentConfig,
};
use thresholding_bandit::{complexity::solve_complexity, Error, Result, Setting};

#[derive(Parser)]
#[command(name = "tbandit", version, about = "Thresholding bandit complexity and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Characteristic time, optimal weights and lower bound as JSON.
    Complexity { config: PathBuf },
    /// Optimal weights, one per line.
    Weights { config: PathBuf },
    /// Monte-Carlo runs; prints the summary CSV.
    Run {
        config: PathBuf,
        /// Per-replication records instead of the summary.
        #[arg(long)]
        raw: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inverse characteristic time and weights along a grid of thresholds.
    Sweep {
        /// Comma-separated arm means.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        mu: Vec<f64>,
        #[arg(long)]
        setting: Setting,
        #[arg(long, allow_hyphen_values = true)]
        smin: f64,
        #[arg(long, allow_hyphen_values = true)]
        smax: f64,
        #[arg(long)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Both reference problems, both settings, all four algorithms, delta = 0.1.
    Table1 {
        #[arg(long, default_value_t = 10_000)]
        replications: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => Ok(std::fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Complexity { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let report = complexity_report(&cfg.instance, cfg.delta)?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.into()))?;
            println!("{json}");
            Ok(())
        }
        Command::Weights { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            for w in solve_complexity(&cfg.instance).weights.as_slice() {
                println!("{w}");
            }
            Ok(())
        }
        Command::Run { config, raw, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let res = run_experiment(&cfg)?;
            let text = if raw { records_csv(&res.records)? } else { summaries_csv(&res.summaries)? };
            emit(&text, out.as_deref())
        }
        Command::Sweep { mu, setting, smin, smax, step, out } => {
            let grid = threshold_grid(smin, smax, step)?;
            let rows = curve_sweep(&mu, setting, &grid)?;
            emit(&curve_csv(&rows), out.as_deref())
        }
        Command::Table1 { replications, seed, threads, out } => {
            if threads == Some(0) {
                return Err(Error::Config("threads must be at least 1".into()));
            }
            let mut rows = Vec::new();
            for cfg in table1_configs(replications, seed, threads) {
                rows.extend(run_experiment(&cfg)?.summaries);
            }
            emit(&summaries_csv(&rows)?, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tbandit: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
