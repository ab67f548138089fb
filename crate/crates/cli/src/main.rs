use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dtc_core::config::{OutputFormat, RunConfig};

mod commands;

#[derive(Parser)]
#[command(name = "dtc", version, about = "Floquet spin-chain simulations and ensemble campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one realization and write the per-period trace.
    Evolve(Common),
    /// Ensemble averages over a parameter grid.
    Sweep(Common),
    /// Mean lifetime versus chain length and its exponential fit.
    Scaling {
        #[command(flatten)]
        common: Common,
        /// Refit an existing per-length CSV instead of simulating.
        #[arg(long, value_name = "PATH")]
        from_points: Option<PathBuf>,
    },
    /// Sweep over H2I pulse counts, with 0 as the Ising reference.
    H2i(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially. Output does not depend on it.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Output file; overrides the config. Standard output when neither is set.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Skip cells already present in the output CSV and append the rest.
    #[arg(long)]
    resume: bool,
    /// Record the wall-clock time in JSON metadata.
    #[arg(long)]
    timestamp: bool,
}

impl Common {
    fn resolve(&self) -> dtc_core::Result<commands::Run> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(path) = &self.output {
            config.output.path = Some(path.clone());
        }
        if let Some(format) = self.format {
            config.output.format = match format {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
        }
        config.output.timestamp |= self.timestamp;
        Ok(commands::Run {
            config,
            workers: self.workers,
            resume: self.resume,
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Evolve(c) => c.resolve().and_then(|run| commands::evolve(&run)),
        Command::Sweep(c) => c.resolve().and_then(|run| commands::sweep(&run)),
        Command::Scaling { common, from_points } => common
            .resolve()
            .and_then(|run| commands::scaling(&run, from_points.as_deref())),
        Command::H2i(c) => c.resolve().and_then(|run| commands::h2i(&run)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dtc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
