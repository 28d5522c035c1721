use std::process::ExitCode;

use clap::Parser;
use poolplan::cli::{emit, execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli).and_then(|r| emit(&r)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
