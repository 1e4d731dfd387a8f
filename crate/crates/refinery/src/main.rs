use std::process::ExitCode;

use clap::Parser;
use refinery::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("refinery: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
