use std::process::ExitCode;

use clap::Parser;
use hardy_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.violations > 0 {
                eprintln!("{} invariant violations", outcome.violations);
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(2)
        }
    }
}
