//! `storedlight` command-line front end: simulate, sweep, plan, fit and
//! validate. Errors go to stderr as one JSON line; exit code 1 means the
//! request or its inputs were invalid, 2 means the run failed.

/// `println!` that ignores a closed stdout (e.g. when piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod error;
mod fit;
mod output;
mod plan;
mod report;
mod setup;
mod simulate;
mod sweep;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::json;
use storedlight::protocols::Protocol;
use storedlight::validate_config;

use error::{CliError, CliResult};
use output::config_hash;
use setup::ConfigArgs;

#[derive(Debug, Parser)]
#[command(
    name = "storedlight",
    version,
    about = "EIT light-storage and conveyor-transport simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one protocol and write its time series and summary.
    Simulate(simulate::SimulateArgs),
    /// Run one protocol over a list of values of a config key.
    Sweep(sweep::SweepArgs),
    /// Write a conveyor ramp table with a feasibility check.
    Plan(plan::PlanArgs),
    /// Fit A·exp(−t/τ) to efficiencies from a CSV file.
    Fit(fit::FitArgs),
    /// Check a configuration and print the report.
    Validate(ConfigArgs),
}

pub(crate) fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.parse().map_err(|_| {
        let names: Vec<_> = Protocol::ALL.iter().map(|p| p.name()).collect();
        format!("unknown protocol `{s}`, expected one of {}", names.join(", "))
    })
}

fn validate(args: &ConfigArgs) -> CliResult<()> {
    let cfg = args.load()?;
    let report = validate_config(&cfg);
    let body = json!({
        "valid": report.is_valid(),
        "violations": report.violations,
        "warnings": report.warnings,
        "config_hash": config_hash(&cfg),
    });
    say!("{}", serde_json::to_string_pretty(&body).expect("serialisable"));
    if report.is_valid() {
        Ok(())
    } else {
        Err(CliError::Validation(report.violations))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => simulate::run(&a),
        Command::Sweep(a) => sweep::run(&a),
        Command::Plan(a) => plan::run(&a),
        Command::Fit(a) => fit::run(&a),
        Command::Validate(a) => validate(&a),
    }
}

fn main() {
    let code = match Cli::try_parse() {
        Ok(cli) => match run(cli) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("{}", e.to_json());
                e.exit_code()
            }
        },
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            0
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
    };
    std::process::exit(code);
}
