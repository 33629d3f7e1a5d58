//! Batch front end: a JSON configuration selects one command
//! (`run`, `stability`, `sweep`, `mms`, `check-coeffs`, `poisson-test`) whose
//! tables are written to an output directory together with a gnuplot script.
//!
//! Exit codes: 0 success, 1 configuration, 2 numerical failure, 3 I/O.

mod config;
mod dispatch;
mod plots;

use std::path::PathBuf;

pub use config::{
    load_config, parse_config, CheckSpec, Command, ConfigError, ConfigIssue, MmsSpec, OutputSpec, RunConfig,
    StabilitySpec,
};
pub use dispatch::{dispatch, resolve_output_dir, CliError, Outcome, OUTPUT_ROOT_ENV};
pub use plots::{emit_plots, MissingOutputs};

#[derive(Debug, Clone, clap::Parser)]
#[command(
    name = "crossdiff",
    version,
    about = "Finite-volume lab for triangular cross-diffusion systems"
)]
pub struct Args {
    /// JSON run configuration.
    pub config: PathBuf,
    /// Output directory; overrides the configuration and the environment.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Upper bound on concurrently running sweep members.
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Loads, dispatches and reports; returns the process exit code. Errors go
/// to stderr as a JSON object, warnings as plain lines.
pub fn execute(args: &Args) -> i32 {
    let result = load_config(&args.config).map_err(CliError::from).and_then(|cfg| {
        let dir = resolve_output_dir(&cfg, args.out.as_deref());
        dispatch(&cfg, &dir, args.jobs)
    });
    match result {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "wrote {} file(s) to {}",
                outcome.files.len(),
                outcome.directory.display()
            );
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
