mod commands;
mod config;
mod failure;
mod input;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Map;

use commands::{audit, calibrate, rank, topk, utility, Ctx};
use failure::{CliResult, Failure};
use record::Format;

/// Oneshot differentially private top-k selection.
#[derive(Debug, Parser)]
#[command(name = "oneshot", version = record::BUILD_ID)]
struct Cli {
    /// Seed for all randomness [default: `seed` from --config, else 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format: a JSON record, or CSV with a provenance comment line.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for trials and audit corners [default: all cores].
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// JSON object supplying defaults for the subcommand's flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    Calibrate(calibrate::Args),
    Topk(topk::Args),
    Audit(audit::Args),
    Utility(utility::Args),
    Rank(rank::Args),
}

fn run(cli: Cli) -> CliResult<u8> {
    let mut file = match &cli.config {
        Some(path) => config::load(path)?,
        None => Map::new(),
    };
    let file_seed = match file.remove("seed") {
        Some(v) => Some(v.as_u64().ok_or_else(|| Failure::invalid("config `seed` must be a non-negative integer"))?),
        None => None,
    };
    let ctx = Ctx { seed: cli.seed.or(file_seed).unwrap_or(0), file };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::invalid(format!("cannot start {:?} workers: {e}", cli.jobs)))?;
    let outcome = pool.install(|| match &cli.command {
        Command::Calibrate(a) => calibrate::run(a, &ctx),
        Command::Topk(a) => topk::run(a, &ctx),
        Command::Audit(a) => audit::run(a, &ctx),
        Command::Utility(a) => utility::run(a, &ctx),
        Command::Rank(a) => rank::run(a, &ctx),
    })?;
    let text = outcome.record.render(cli.format);
    match &cli.output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Failure::invalid(format!("cannot write {}: {e}", path.display())))?
        }
        None => print!("{text}"),
    }
    if let Some(msg) = outcome.diagnostic {
        eprintln!("oneshot: {msg}");
    }
    Ok(outcome.code)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("oneshot: error: {f}");
            ExitCode::from(f.code)
        }
    }
}
