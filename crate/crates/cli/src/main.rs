//! Binary entry point: argument parsing, dispatch, and the exit-code
//! contract (0 success, 2 data, 3 training failure, 64 usage, 65 format).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cesrnn::commands::{self, BaselineModel};
use cesrnn::config::Overrides;
use cesrnn::{exit, CliError};

#[derive(Parser)]
#[command(
    name = "cesrnn",
    version,
    about = "Contextual smoothing/recurrent ensemble forecaster for daily price panels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a CSV panel and report schema or data defects.
    Validate {
        /// Directory of per-coin CSV files.
        data_dir: PathBuf,
        /// Flat key=value config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Minimum days of history required per coin.
        #[arg(long)]
        min_history: Option<usize>,
    },
    /// Train an ensemble and write a run directory (config echo, checkpoints,
    /// training log, manifest).
    Train {
        /// Directory of per-coin CSV files.
        data_dir: PathBuf,
        /// Run directory to write.
        #[arg(long)]
        out: PathBuf,
        /// Flat key=value config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Forecast horizon in days.
        #[arg(long)]
        horizon: Option<usize>,
        /// Ensemble size.
        #[arg(long)]
        ensemble: Option<usize>,
        /// Base RNG seed; member k trains with seed+k.
        #[arg(long, env = "CESRNN_SEED")]
        seed: Option<u64>,
        /// Training epochs.
        #[arg(long)]
        epochs: Option<usize>,
        /// Parameter updates per epoch.
        #[arg(long)]
        updates: Option<usize>,
        /// Context series id.
        #[arg(long)]
        context: Option<String>,
        /// First day excluded from training (YYYY-MM-DD); later days are
        /// held out for backtesting.
        #[arg(long)]
        train_until: Option<String>,
        /// Worker threads for member training (default: available cores).
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=4096))]
        jobs: Option<u64>,
    },
    /// Roll a trained run over a test range, writing forecast, metrics, and
    /// loss tables.
    Backtest {
        /// Run directory produced by `train`.
        run_dir: PathBuf,
        /// Directory of per-coin CSV files.
        data_dir: PathBuf,
        /// First anchor day (YYYY-MM-DD).
        #[arg(long)]
        from: String,
        /// Last anchor day (YYYY-MM-DD).
        #[arg(long)]
        to: String,
        /// Output directory (default: `backtest_<from>_<to>` inside the run
        /// directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Retrain the ensemble every K test days on the data before each
        /// segment (the run's checkpoints are ignored; its config drives
        /// training).
        #[arg(long, value_name = "K", value_parser = clap::value_parser!(u64).range(1..))]
        retrain_every: Option<u64>,
    },
    /// Compare two per-anchor loss tables with the conditional predictive
    /// ability test.
    Gw {
        /// Loss table of model A (coin,anchor_date,loss).
        loss_a: PathBuf,
        /// Loss table of model B.
        loss_b: PathBuf,
        /// Significance level.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Run a reference model over the same rolling protocol as `backtest`.
    Baseline {
        /// Directory of per-coin CSV files.
        data_dir: PathBuf,
        /// Reference model.
        #[arg(long, value_enum)]
        model: BaselineModel,
        /// Forecast horizon in days.
        #[arg(long)]
        horizon: Option<usize>,
        /// First anchor day (YYYY-MM-DD).
        #[arg(long)]
        from: String,
        /// Last anchor day (YYYY-MM-DD).
        #[arg(long)]
        to: String,
        /// Smoothing coefficient for the `es` model.
        #[arg(long, default_value_t = 0.5)]
        es_alpha: f64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Flat key=value config file.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { data_dir, config, min_history } => {
            let overrides = Overrides { min_history, ..Overrides::default() };
            commands::cmd_validate(&data_dir, config.as_deref(), &overrides)
        }
        Command::Train {
            data_dir,
            out,
            config,
            horizon,
            ensemble,
            seed,
            epochs,
            updates,
            context,
            train_until,
            jobs,
        } => {
            let overrides = Overrides {
                horizon,
                ensemble,
                seed,
                epochs,
                updates,
                context,
                train_until,
                min_history: None,
            };
            commands::cmd_train(
                &data_dir,
                &out,
                config.as_deref(),
                &overrides,
                jobs.map(|j| j as usize),
            )
        }
        Command::Backtest { run_dir, data_dir, from, to, out, retrain_every } => commands::cmd_backtest(
            &run_dir,
            &data_dir,
            &from,
            &to,
            out.as_deref(),
            retrain_every.map(|k| k as usize),
        ),
        Command::Gw { loss_a, loss_b, alpha } => commands::cmd_gw(&loss_a, &loss_b, alpha),
        Command::Baseline { data_dir, model, horizon, from, to, es_alpha, out, config } => {
            let overrides = Overrides { horizon, ..Overrides::default() };
            commands::cmd_baseline(
                &data_dir,
                model,
                &from,
                &to,
                es_alpha,
                &out,
                config.as_deref(),
                &overrides,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(exit::USAGE as u8)
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
