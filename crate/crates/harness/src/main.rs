use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fedpg_harness::constants::constants_report;
use fedpg_harness::experiment::run_experiment;
use fedpg_harness::sweep::{aggregate_path, run_sweep};
use fedpg_harness::validate::{run_validate, Level, ValidateOptions};
use fedpg_harness::{ExperimentConfig, HarnessError};

/// Federated policy-gradient experiments.
///
/// Exit status: 0 success, 1 configuration error, 2 run failure,
/// 3 validation failure.
#[derive(Parser)]
#[command(name = "fedpg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured cell `repeats` times and write the per-round CSV.
    Run(RunArgs),
    /// Run every β × κ × N cell and also write the per-cell aggregate.
    Sweep(RunArgs),
    /// Run the identity and bound checks.
    Validate {
        #[arg(long, default_value = "quick")]
        level: Level,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the theory constants and recommended hyperparameters.
    Constants {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "FEDPG_THREADS")]
    parallel: Option<usize>,
}

fn load(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<ExperimentConfig, HarnessError> {
    let src = std::fs::read_to_string(path)
        .map_err(|source| HarnessError::ConfigRead { path: path.to_path_buf(), source })?;
    let mut cfg = ExperimentConfig::parse(&src)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output = o;
    }
    Ok(cfg)
}

fn execute(command: Command) -> Result<ExitCode, HarnessError> {
    match command {
        Command::Run(a) => {
            let cfg = load(&a.config, a.seed, a.out)?;
            let records = run_experiment(&cfg, a.parallel.unwrap_or(1))?;
            let rows: usize = records.iter().map(|r| r.log.rows.len()).sum();
            eprintln!("wrote {rows} rows from {} runs to {}", records.len(), cfg.output.display());
        }
        Command::Sweep(a) => {
            let cfg = load(&a.config, a.seed, a.out)?;
            let out = run_sweep(&cfg, a.parallel.unwrap_or(1))?;
            eprintln!(
                "wrote {} runs to {} and {} cells to {}",
                out.records.len(),
                cfg.output.display(),
                out.cells.len(),
                aggregate_path(&cfg.output).display()
            );
        }
        Command::Validate { level, seed } => {
            let checks = run_validate(&ValidateOptions { level, seed, ..ValidateOptions::default() });
            for c in &checks {
                println!("{c}");
            }
            if checks.iter().any(|c| !c.passed) {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Constants { config, seed } => {
            let cfg = load(&config, seed, None)?;
            print!("{}", constants_report(&cfg)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage mistakes are configuration errors; --help and --version are not.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
