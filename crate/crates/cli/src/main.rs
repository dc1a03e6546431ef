use clap::Parser;
use std::process::ExitCode;

use darboux_lab::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if let Some(report) = &outcome.report {
                println!("{}", report.lines().join("\n"));
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("darboux-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
