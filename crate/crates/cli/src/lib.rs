//! Command-line front end for the `pinfluence` library.

pub mod args;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod plot;

use std::path::PathBuf;

use args::{Cli, Task};
use error::CliResult;

/// Resolves the config and runs one subcommand. Returns the written paths.
pub fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    let print_config = cli.print_config;
    let (task, config) = cli.resolve()?;
    if print_config {
        println!("{}", config.to_json());
        return Ok(Vec::new());
    }
    match task {
        Task::Extract => pipeline::run_extract(&config),
        Task::Validate => {
            let (written, report) = pipeline::run_validate(&config)?;
            for cell in &report.cells {
                eprintln!(
                    "rho={:<3} {:<6} mean={:.3e} {}",
                    cell.rho,
                    cell.measurement.to_string(),
                    cell.mean,
                    if cell.pass { "ok" } else { "above threshold" }
                );
            }
            Ok(written)
        }
        Task::Compare => pipeline::run_compare(&config),
        Task::Classify => {
            let (written, result) = pipeline::run_classify(&config)?;
            eprintln!("predicted category: {}", result.predicted);
            Ok(written)
        }
        Task::Synth => pipeline::run_synth(&config),
    }
}
