//! `propscope` command-line entry point.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O or provider error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use propscope::exec::Exec;
use propscope::{Error, Result};

use commands::{Context, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "propscope", version, about = "Interpretable sentence-level propaganda technique detection")]
struct Cli {
    /// JSON run configuration (paths, providers, experiment).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for tie-breaking and recorded in every manifest.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Project span annotations onto sentences and split the corpus.
    Prepare(commands::PrepareArgs),
    /// Extract per-sentence feature matrices.
    Features(commands::FeaturesArgs),
    /// Feature/technique covariance matrix and heatmap.
    Covariance(commands::CovarianceArgs),
    /// Grid-search and train an SVM.
    Train(commands::TrainArgs),
    /// Score a trained model and render result tables.
    Evaluate(commands::EvaluateArgs),
    /// Retrain without selected feature groups.
    Ablate(commands::AblateArgs),
    /// Per-sentence explanations as JSON or HTML.
    Explain(commands::ExplainArgs),
    /// Serve the configured providers over stdin/stdout.
    #[command(hide = true)]
    ServeProviders,
}

fn exec_for(workers: Option<usize>) -> Result<Exec> {
    match workers {
        None => Ok(Exec::Parallel),
        Some(0) => Err(Error::validation("--workers must be at least 1")),
        Some(1) => Ok(Exec::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::validation(format!("cannot start {n} workers: {e}")))?;
            Ok(Exec::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Exec::Sequential),
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) if !p.exists() => return Err(Error::validation(format!("--config: {} does not exist", p.display()))),
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(config.seed).unwrap_or(config.experiment.seed);
    let out = cli.out.clone().or_else(|| config.out.clone());
    let ctx = Context { exec: exec_for(cli.workers)?, config, seed, out };
    match &cli.command {
        Command::Prepare(a) => commands::prepare(&ctx, a),
        Command::Features(a) => commands::features(&ctx, a),
        Command::Covariance(a) => commands::covariance(&ctx, a),
        Command::Train(a) => commands::train(&ctx, a),
        Command::Evaluate(a) => commands::evaluate(&ctx, a),
        Command::Ablate(a) => commands::ablate(&ctx, a),
        Command::Explain(a) => commands::explain(&ctx, a),
        Command::ServeProviders => commands::serve_providers(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
