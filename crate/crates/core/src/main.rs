use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use radar_e2e::config::{load_config, ExperimentConfig, Mode};
use radar_e2e::experiment::{self, exit_code, Manifest};
use radar_e2e::Result;

/// Worker threads for Monte Carlo and training batches.
const THREADS_ENV: &str = "RADAR_E2E_THREADS";

const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Parser)]
#[command(version, about = "End-to-end radar waveform and detector learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Exit with status 4 if training or waveform design did not converge.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train (or design, for mode = "baseline") and evaluate.
    Run { config: PathBuf },
    /// Evaluate stored weights on the configured test environment.
    Eval {
        /// Receiver weights; the transmitter is read from `transmitter.weights`
        /// in the same directory unless `--transmitter` is given.
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        transmitter: Option<PathBuf>,
        config: PathBuf,
    },
    /// Optimal waveform with the square-law detector.
    Baseline { config: PathBuf },
}

fn prepare(cli: &Cli, path: &PathBuf) -> Result<ExperimentConfig> {
    let mut cfg = load_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<Manifest> {
    match &cli.command {
        Command::Run { config } => experiment::run(&prepare(cli, config)?),
        Command::Baseline { config } => {
            let mut cfg = prepare(cli, config)?;
            cfg.mode = Mode::Baseline;
            experiment::run(&cfg)
        }
        Command::Eval {
            weights,
            transmitter,
            config,
        } => experiment::evaluate_weights(&prepare(cli, config)?, weights, transmitter.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Ok(n) = std::env::var(THREADS_ENV) {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got `{n}`");
                return ExitCode::from(2);
            }
        }
    }
    match execute(&cli) {
        Ok(m) => {
            log::info!("wrote {} files in {:.1}s", m.files.len() + 1, m.wall_time_s);
            if cli.strict && !m.converged {
                eprintln!("error: did not converge (--strict)");
                return ExitCode::from(EXIT_NOT_CONVERGED);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
