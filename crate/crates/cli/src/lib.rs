//! Command-line driver: configuration, sweeps over (d, sigma), and CSV / JSON output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use chrono::Utc;

pub use config::{Cli, Command, RunConfig};
pub use error::{CliError, Result};
pub use output::Report;

/// Runs one command end to end and writes its files. Returns the report and the paths written.
pub fn run(cfg: &RunConfig) -> Result<(Report, Vec<PathBuf>)> {
    cfg.validate()?;
    cfg.prepare_output()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {:?} worker threads: {e}", cfg.threads)))?;
    let started = Utc::now();
    log::info!("running {} into {}", cfg.command.name(), cfg.out.display());
    let report = pool.install(|| commands::execute(cfg))?;
    let finished = Utc::now();
    let written = output::write_report(cfg, &report, started, finished)?;
    for path in &written {
        log::info!("wrote {}", path.display());
    }
    Ok((report, written))
}
