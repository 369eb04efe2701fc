mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "riskgate",
    version,
    about = "Risk-ranked security assessment with calibrated boosted stumps"
)]
struct Cli {
    /// Network file (JSON); the embedded 6-bus case is used when omitted.
    #[arg(long, global = true)]
    network: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand that reads an experiment config.
#[derive(Debug, Args, Clone, Default)]
pub struct Overrides {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rounds: Option<usize>,
    /// `samme` or `samme.r`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample operating conditions, label them and write `dataset.csv`.
    Generate {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Boost one model per contingency of the dataset (training split).
    Train {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Fit the sigmoid of each model on the calibration split.
    Calibrate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Defaults to the models directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank test-split scenarios and verify the top `--budget` with the grid oracle.
    Triage {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        contingencies: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Residual-risk curves of the ranking and both reference strategies.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        contingencies: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a complete study.
    Experiment {
        /// imbalance, calibration, threshold, triage, multi or sensitivity.
        name: String,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let grid = commands::load_grid(cli.network.as_deref())?;
    match cli.command {
        Command::Generate { overrides, out } => commands::generate(&grid, &overrides, &out),
        Command::Train { data, overrides, out } => commands::train(&data, &overrides, &out),
        Command::Calibrate {
            data,
            models,
            overrides,
            out,
        } => {
            let out = out.unwrap_or_else(|| models.clone());
            commands::calibrate(&data, &models, &overrides, &out)
        }
        Command::Triage {
            data,
            models,
            contingencies,
            overrides,
            out,
        } => commands::triage(&grid, &data, &models, &contingencies, &overrides, &out),
        Command::Evaluate {
            data,
            models,
            contingencies,
            overrides,
            out,
        } => commands::evaluate(&data, &models, &contingencies, &overrides, &out),
        Command::Experiment { name, overrides, out } => commands::experiment(&grid, &name, &overrides, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("riskgate: {e}");
            e.exit_code()
        }
    }
}
