//! Command-line driver: scenario files, figure presets, CSV export and the
//! verification suites.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;

use clap::Parser;
use std::path::PathBuf;

use darboux_core::checks::{Suite, VerifyReport};

pub use commands::Command;
pub use config::Scenario;
pub use error::CliError;

pub const THREADS_ENV: &str = "DARBOUX_LAB_THREADS";

#[derive(Debug, Clone, Parser)]
#[command(name = "darboux-lab", version, about = "Nonstationary oscillators from time-dependent Darboux transformations")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Scenario file (JSON).
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in scenario: fig1 .. fig8.
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory; overrides the scenario's output_dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; falls back to DARBOUX_LAB_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Suite for `verify`: classical, modes, darboux, coherent or all.
    #[arg(long, default_value = "all")]
    pub suite: String,
}

/// What a successful or verification-failed run produced.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub report: Option<VerifyReport>,
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{THREADS_ENV}={v} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn load_scenario(cli: &Cli) -> Result<Scenario, CliError> {
    match (&cli.config, &cli.preset) {
        (Some(path), _) => Scenario::load(path),
        (None, Some(name)) => presets::scenario(name),
        (None, None) => Err(CliError::Config("either --config or --preset is required".into())),
    }
}

/// Runs one invocation inside a pool of the requested size.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let threads = thread_count(cli.threads)?;
    if threads == Some(0) {
        return Err(CliError::Config("thread count must be positive".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| execute(cli))
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let scenario = load_scenario(cli)?;
    let suite = Suite::parse(&cli.suite).ok_or_else(|| CliError::Config(format!("unknown suite '{}'", cli.suite)))?;
    let checked = scenario.check()?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let files = match cli.command {
        Command::Potential => commands::potential(&checked)?,
        Command::States => commands::states(&checked)?,
        Command::Coherent => commands::coherent(&checked)?,
        Command::Verify => {
            let (report, json) = commands::verify(&checked, suite)?;
            let files = output::write_atomically(&out_dir, &[json])?;
            let failed = report.failures().count();
            if failed > 0 {
                eprintln!("{}", report.lines().join("\n"));
                return Err(CliError::Verification { failed, total: report.checks.len() });
            }
            return Ok(Outcome { files, report: Some(report) });
        }
    };
    let written = output::write_atomically(&out_dir, &files)?;
    Ok(Outcome { files: written, report: None })
}

/// Regenerates the figure data of a preset with its associated command.
pub fn run_preset(name: &str, out: &std::path::Path) -> Result<Outcome, CliError> {
    let cli = Cli {
        command: presets::command(name)?,
        config: None,
        preset: Some(name.to_string()),
        out: Some(out.to_path_buf()),
        threads: None,
        suite: "all".into(),
    };
    execute(&cli)
}
