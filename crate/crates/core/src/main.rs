//! Command-line interface for running verification scenarios.
//!
//! Exit codes: `0` when every check passes, `1` when any residual exceeds
//! its tolerance, `2` for input or evaluation errors.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use tmlift::fixtures::{all_fixtures, fixture, FIXTURE_NAMES};
use tmlift::scenario::{parse_scenario, run_scenario, RunReport};

#[derive(Parser)]
#[command(
    name = "tmlift",
    version,
    about = "Verifies lifted two-form structures on tangent bundles \
             against sampled residual checks."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and print its report.
    Run {
        /// Path to a scenario JSON file.
        file: PathBuf,
        /// Output format for the report printed to stdout.
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Also write the JSON report to this path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Inspect or export the built-in example scenarios.
    Fixtures {
        #[command(subcommand)]
        command: FixturesCommand,
    },
    /// Re-render a previously saved JSON report.
    Report {
        /// Path to a report JSON file produced by `run`.
        file: PathBuf,
        /// Output format.
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum FixturesCommand {
    /// List fixture names with their expected outcomes.
    List,
    /// Write a fixture's scenario JSON to a file.
    Export {
        /// Fixture name (see `fixtures list`).
        name: String,
        /// Destination path for the scenario JSON.
        path: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn main() {
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            2
        }
    };
    std::process::exit(code);
}

fn execute(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::Run {
            file,
            format,
            report,
        } => {
            let label = file.display().to_string();
            let text = fs::read_to_string(&file)
                .map_err(|e| format!("cannot read scenario `{label}`: {e}"))?;
            let scenario = parse_scenario(&text).map_err(|e| e.to_string())?;
            let run_report = run_scenario(&scenario, &label).map_err(|e| e.to_string())?;
            let json = serde_json::to_string_pretty(&run_report)
                .map_err(|e| format!("cannot serialize report: {e}"))?;
            if let Some(path) = report {
                fs::write(&path, format!("{json}\n"))
                    .map_err(|e| format!("cannot write report `{}`: {e}", path.display()))?;
            }
            print_report(&run_report, &json, format);
            Ok(if run_report.passed() { 0 } else { 1 })
        }
        Command::Fixtures { command } => match command {
            FixturesCommand::List => {
                for f in all_fixtures() {
                    println!(
                        "{:<22} expected exit {}  {}",
                        f.name,
                        f.expected_exit(),
                        f.summary
                    );
                }
                Ok(0)
            }
            FixturesCommand::Export { name, path } => {
                let f = fixture(&name).ok_or_else(|| {
                    format!(
                        "unknown fixture `{name}` (known: {})",
                        FIXTURE_NAMES.join(", ")
                    )
                })?;
                let json = serde_json::to_string_pretty(&f.file)
                    .map_err(|e| format!("cannot serialize fixture `{name}`: {e}"))?;
                fs::write(&path, format!("{json}\n"))
                    .map_err(|e| format!("cannot write `{}`: {e}", path.display()))?;
                Ok(0)
            }
        },
        Command::Report { file, format } => {
            let text = fs::read_to_string(&file)
                .map_err(|e| format!("cannot read report `{}`: {e}", file.display()))?;
            let report: RunReport = serde_json::from_str(&text)
                .map_err(|e| format!("invalid report JSON: {e}"))?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| format!("cannot serialize report: {e}"))?;
            print_report(&report, &json, format);
            Ok(0)
        }
    }
}

fn print_report(report: &RunReport, json: &str, format: Format) {
    match format {
        Format::Json => println!("{json}"),
        Format::Text => print!("{}", report.to_text()),
    }
}
