//! Command-line surface tying dataset generation, training, linear
//! reduction and query benchmarking into reproducible, config-driven runs.
//!
//! Every run writes its artifacts plus a fully resolved `config.txt` under
//! `--out`; replaying that file through `--config` reproduces the run.
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric
//! divergence.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nifkit", version, about = "Mesh-agnostic dimensionality reduction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (key=value lines or JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Input point-cloud CSV.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Training point-cloud CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Held-out point-cloud CSV for test error reporting.
    #[arg(long)]
    test_data: Option<PathBuf>,
    /// Model kind: nif-full, nif-lastlayer, mlp, deeponet, fourier, siren.
    #[arg(long)]
    model: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct DmdArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Latent series CSV (rows = latent dimensions, columns = snapshots).
    #[arg(long)]
    series: Option<PathBuf>,
    /// Trained last-layer checkpoint (used with --data).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Hypernetwork checkpoint to compile.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Monolithic comparator checkpoint; a fresh sine network of matched
    /// depth and 1.37x width is built when absent.
    #[arg(long)]
    mono_checkpoint: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the parametric Kuramoto-Sivashinsky dataset.
    GenKs(CommonArgs),
    /// Generate the modulated traveling wave dataset.
    GenWave(CommonArgs),
    /// Train a model on a point-cloud dataset.
    Train(TrainArgs),
    /// Report RMSE of a trained checkpoint on a dataset.
    Eval(EvalArgs),
    /// Proper orthogonal decomposition of a snapshot dataset.
    Pod(DataArgs),
    /// Sensor selection by pivoted QR of the POD basis.
    Qdeim(DataArgs),
    /// Build the sparse-sensing training dataset (and its linear baseline).
    SparseSense(DataArgs),
    /// Dynamic mode decomposition of latent series.
    Dmd(DmdArgs),
    /// Compare compiled spatial query against a monolithic network.
    BenchQuery(BenchArgs),
}

/// Anything that should stop a run, mapped onto the process exit code.
pub enum AppError {
    Usage(String),
    Lib(nifkit::Error),
}

impl From<nifkit::Error> for AppError {
    fn from(e: nifkit::Error) -> Self {
        AppError::Lib(e)
    }
}

impl From<config::ConfigError> for AppError {
    fn from(e: config::ConfigError) -> Self {
        AppError::Usage(e.0)
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Lib(nifkit::Error::Io(e))
    }
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Lib(e) => match e {
                nifkit::Error::Divergence { .. } | nifkit::Error::Numeric { .. } => 3,
                _ => 2,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            AppError::Usage(m) => format!("usage error: {m}"),
            AppError::Lib(e) => format!("error: {e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::GenKs(args) => commands::gen_ks(args),
        Command::GenWave(args) => commands::gen_wave(args),
        Command::Train(args) => commands::train(args),
        Command::Eval(args) => commands::eval(args),
        Command::Pod(args) => commands::pod(args),
        Command::Qdeim(args) => commands::qdeim(args),
        Command::SparseSense(args) => commands::sparse_sense(args),
        Command::Dmd(args) => commands::dmd(args),
        Command::BenchQuery(args) => commands::bench_query(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
