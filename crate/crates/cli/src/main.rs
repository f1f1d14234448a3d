//! `errsim`: train a phonetic confusion matrix, simulate recognition errors
//! and score the simulations against real recognizer output.
//!
//! Failures print one `error[category]: message` line on stderr and exit with
//! 2 (usage), 3 (data) or 4 (resource cap).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use errsim_core::ErrorCategory;

use crate::commands::Mode;
use crate::config::ConfigArgs;

#[derive(Debug, Parser)]
#[command(name = "errsim", version, about = "Simulate plausible ASR errors from clean text")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a confusion matrix from aligned gold and recognized phones.
    TrainConfmat {
        #[arg(long, short)]
        output: PathBuf,
        /// Also write beta-smoothed training targets per phone (JSON lines).
        #[arg(long, value_name = "FILE")]
        targets: Option<PathBuf>,
    },
    /// Produce ranked alternatives for each gold sentence of the corpus.
    Simulate {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Simulation outputs to combine in merge mode (give twice).
        #[arg(long = "input", value_name = "FILE")]
        inputs: Vec<PathBuf>,
        /// JSON lines; stdout when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Chunk and utterance recall of simulated alternatives.
    Evaluate {
        #[arg(long, value_name = "FILE")]
        predictions: PathBuf,
        /// Report JSON; stdout when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        per_utterance: Option<PathBuf>,
    },
    /// Phone alignments of gold against recognized text.
    AlignDump {
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::TrainConfmat { .. } => "train-confmat",
            Command::Simulate { .. } => "simulate",
            Command::Evaluate { .. } => "evaluate",
            Command::AlignDump { .. } => "align-dump",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Output(String),
    Core(errsim_core::Error),
}

impl From<errsim_core::Error> for CliError {
    fn from(e: errsim_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn category(&self) -> (&'static str, u8) {
        match self {
            CliError::Usage(_) => ("usage", 2),
            CliError::Output(_) => ("data", 3),
            CliError::Core(e) => match e.category() {
                ErrorCategory::Data => ("data", 3),
                ErrorCategory::Resource => ("resource", 4),
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Output(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

fn fail(err: &CliError) -> ExitCode {
    let (category, code) = err.category();
    let message = err.message().replace(['\n', '\r'], " ");
    eprintln!("error[{category}]: {message}");
    ExitCode::from(code)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = cli.config.resolve()?;
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    eprintln!("errsim {} seed={}", cli.command.name(), config.seed);
    eprintln!("config {}", serde_json::to_string(&config)?);
    match &cli.command {
        Command::TrainConfmat { output, targets } => commands::train_confmat(&config, output, targets.as_deref()),
        Command::Simulate { mode, inputs, output } => commands::simulate(&config, *mode, inputs, output.as_deref()),
        Command::Evaluate {
            predictions,
            output,
            per_utterance,
        } => commands::evaluate_run(&config, predictions, output.as_deref(), per_utterance.as_deref()),
        Command::AlignDump { output } => commands::align_dump(&config, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            return fail(&CliError::Usage(first.trim_start_matches("error: ").to_string()));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
