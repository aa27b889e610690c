//! `copos` command-line interface.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use copos::fuzzy::ExtremaMode;

use commands::{CliError, EXIT_CONFIG};
use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "copos", version, about = "Positive fuzzy controller synthesis for tumor-immune therapy models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate and classify the equilibria of the untreated model.
    Equilibria(Common),
    /// Build the sector-nonlinearity vertex systems.
    Fuzzify(Common),
    /// Solve the synthesis LP and verify the closed loop.
    Synthesize {
        #[command(flatten)]
        common: Common,
        /// Also write the LP in text form.
        #[arg(long)]
        dump_lp: bool,
    },
    /// Run the configured treatment scenarios.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Use gains from a previous `synthesize` output instead of solving again.
        #[arg(long, value_name = "FILE")]
        gains: Option<PathBuf>,
        #[arg(long)]
        dump_lp: bool,
    },
    /// Run every stage and write a combined summary.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dump_lp: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Endpoint,
    Global,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Named preset: stepanova-table1 or reproduce-paper.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Premise extrema mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Design sampling period in days.
    #[arg(long = "T", value_name = "DAYS")]
    sampling_period: Option<f64>,
    /// Restrict M to nonpositive entries and drop the integral-action rows.
    #[arg(long)]
    strict_paper: bool,
    /// Omit the generation time from output files.
    #[arg(long)]
    no_timestamp: bool,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => config::parse_file(path),
            None => Ok(config::ConfigFile::default()),
        };
        let overrides = Overrides {
            preset: self.preset.clone(),
            out: self.out.clone(),
            mode: self.mode.map(|m| match m {
                ModeArg::Endpoint => ExtremaMode::Endpoint,
                ModeArg::Global => ExtremaMode::Global,
            }),
            sampling_period: self.sampling_period,
            strict_paper: self.strict_paper,
            no_timestamp: self.no_timestamp,
        };
        file.and_then(|f| RunConfig::resolve(f, &overrides))
            .map_err(|e| CliError::new(EXIT_CONFIG, format!("configuration error: {e}")))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Equilibria(c) => commands::equilibria(&c.resolve()?),
        Command::Fuzzify(c) => commands::fuzzify(&c.resolve()?),
        Command::Synthesize { common, dump_lp } => commands::synthesize(&common.resolve()?, dump_lp),
        Command::Simulate { common, gains, dump_lp } => {
            commands::simulate(&common.resolve()?, gains.as_deref(), dump_lp)
        }
        Command::Report { common, dump_lp } => commands::report(&common.resolve()?, dump_lp),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COPOS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
