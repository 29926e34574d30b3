use std::process::ExitCode;

use clap::Parser;
use pinfluence_cli::args::Cli;

fn main() -> ExitCode {
    match pinfluence_cli::run(Cli::parse()) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
