//! `rul-uap`: train RUL regressors, compute universal perturbations against
//! them and write CSV reports.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 numeric failure.

mod commands;
mod config;
mod error;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rul_uap::models::Arch;

use crate::commands::TransferArgs;
use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "rul-uap", version, about = "Universal adversarial perturbations against RUL regressors")]
struct Cli {
    /// JSON run config; flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (default: config `output_dir`, else `out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Top-level seed; per-purpose seeds derive from it.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct AttackFlags {
    /// L-infinity bound of the perturbation.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Overprediction factor of the fooling test.
    #[arg(long)]
    alpha: Option<f64>,
    /// Target fooling ratio in (0, 1].
    #[arg(long)]
    rfool: Option<f64>,
    /// Maximum attack epochs.
    #[arg(long)]
    efool: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model; writes checkpoint_<arch>.json and loss_history_<arch>.csv.
    Train {
        #[arg(long)]
        arch: Option<Arch>,
        /// Training epochs.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Compute a universal perturbation; writes perturbation_<arch>.json.
    Attack {
        #[command(flatten)]
        flags: AttackFlags,
        /// Selects the default checkpoint path.
        #[arg(long)]
        arch: Option<Arch>,
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
        /// Output path of the perturbation.
        #[arg(long, value_name = "PATH")]
        perturbation: Option<PathBuf>,
    },
    /// Score a model on the test windows, optionally under a perturbation;
    /// writes report.csv, report.json, trajectory.csv, last_windows.csv and traces.csv.
    Eval {
        #[arg(long)]
        arch: Option<Arch>,
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        perturbation: Option<PathBuf>,
        /// Overprediction factor of the fooling test.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Recompute the perturbation over an epsilon grid; writes sweep.csv.
    Sweep {
        #[command(flatten)]
        flags: AttackFlags,
        #[arg(long)]
        arch: Option<Arch>,
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
    },
    /// Cross-evaluate two models and their perturbations; writes transfer.csv.
    Transfer {
        /// Model A (default: checkpoint_lstm.json in the output directory).
        #[arg(long, value_name = "PATH")]
        checkpoint_a: Option<PathBuf>,
        /// Model B (default: checkpoint_gru.json).
        #[arg(long, value_name = "PATH")]
        checkpoint_b: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        perturbation_a: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        perturbation_b: Option<PathBuf>,
        /// Overprediction factor of the fooling test.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Write a synthetic fleet as C-MAPSS-format train.txt, test.txt and RUL.txt.
    Synth,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let mut o = Overrides {
        out: cli.out,
        seed: cli.seed,
        ..Default::default()
    };
    let attack_flags = |o: &mut Overrides, f: AttackFlags| {
        o.epsilon = f.epsilon;
        o.alpha = f.alpha;
        o.r_fool = f.rfool;
        o.e_fool = f.efool;
    };
    let cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Train { arch, epochs } => {
            o.arch = arch;
            o.epochs = epochs;
            commands::train(&cfg.resolve(&o)?)
        }
        Command::Attack {
            flags,
            arch,
            checkpoint,
            perturbation,
        } => {
            attack_flags(&mut o, flags);
            o.arch = arch;
            commands::attack(&cfg.resolve(&o)?, checkpoint, perturbation)
        }
        Command::Eval {
            arch,
            checkpoint,
            perturbation,
            alpha,
        } => {
            o.arch = arch;
            o.alpha = alpha;
            commands::eval(&cfg.resolve(&o)?, checkpoint, perturbation)
        }
        Command::Sweep {
            flags,
            arch,
            checkpoint,
        } => {
            attack_flags(&mut o, flags);
            o.arch = arch;
            commands::sweep(&cfg.resolve(&o)?, checkpoint)
        }
        Command::Transfer {
            checkpoint_a,
            checkpoint_b,
            perturbation_a,
            perturbation_b,
            alpha,
        } => {
            o.alpha = alpha;
            let args = TransferArgs {
                checkpoint_a,
                checkpoint_b,
                perturbation_a,
                perturbation_b,
            };
            commands::transfer(&cfg.resolve(&o)?, args)
        }
        Command::Synth => commands::synth(&cfg.resolve(&o)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("UAP_LOG", "warn"))
        .format_timestamp(None)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
