use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use macroprice_cli::config::{validate_config, Overrides};
use macroprice_cli::{run_pipeline, run_stage, CliError, RunOptions, Stage};

const DEFAULTS: &str = "\
Configuration defaults (all are recorded in manifest.json):
  seed                          0
  output_dir                    \"output\", relative to the config file
  panel.drop_threshold          0.30 (columns with more missing are dropped)
  panel.align                   intersection
  macro.column                  the series name
  macro.panel                   true
  log_diff scale                100
  stationarity.series           every macro series
  stationarity.za_trigger       adf_unit_root
  stationarity.adf_trend        constant
  stationarity.kpss_trend       level
  stationarity.za_model         intercept
  stationarity.za_trim          0.15
  dfm.factor_counts             1..=min(M, 7), M = panel macro series
  dfm.max_iter                  500
  dfm.tol                       1e-6
  pricing.factor_counts         dfm.factor_counts
  pricing.hac_lags              floor(4 (T/100)^(2/9))
  pricing.significance          0.05
  pricing.market                \"US\" (an asset name, or equal_weighted)

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O error.";

#[derive(Parser)]
#[command(name = "macroprice", version, about = "Macro dynamic-factor asset pricing pipeline", after_help = DEFAULTS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read the configured CSV columns.
    Ingest(Common),
    /// Apply transforms and assemble the macro and return panels.
    Transform(Common),
    /// Run ADF, KPSS and Zivot-Andrews tests on the selected series.
    TestStationarity(Common),
    /// Fit the dynamic factor model for each factor count.
    FitDfm(Common),
    /// CAPM and Fama-MacBeth regressions.
    Price(Common),
    /// Model comparison table and summary.
    Report(Common),
    /// Every stage in order, followed by the run manifest.
    Run {
        #[command(flatten)]
        common: Common,
        /// Record per-stage wall-clock timings in the manifest.
        #[arg(long)]
        timings: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated factor counts; replaces both dfm and pricing lists.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            output_dir: self.out.clone(),
            factor_counts: self.k.clone(),
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (common, stage, timings) = match &cli.command {
        Command::Ingest(c) => (c, Some(Stage::Ingest), false),
        Command::Transform(c) => (c, Some(Stage::Transform), false),
        Command::TestStationarity(c) => (c, Some(Stage::TestStationarity), false),
        Command::FitDfm(c) => (c, Some(Stage::FitDfm), false),
        Command::Price(c) => (c, Some(Stage::Price), false),
        Command::Report(c) => (c, Some(Stage::Report), false),
        Command::Run { common, timings } => (common, None, *timings),
    };
    let cfg = validate_config(&common.config, &common.overrides())?;
    let warnings = match stage {
        Some(stage) => run_stage(&cfg, stage)?,
        None => {
            let bytes = std::fs::read(&common.config).map_err(|e| CliError::Io {
                path: common.config.clone(),
                source: e,
            })?;
            let manifest = run_pipeline(
                &cfg,
                &bytes,
                RunOptions {
                    record_timings: timings,
                },
            )?;
            manifest.warnings
        }
    };
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
