//! Scenario harness around `evostab-core`: JSON configuration, built-in
//! scenarios, and `summary.json` / `rows.csv` reports.

pub mod build;
pub mod builtins;
pub mod config;
pub mod corpus;
pub mod report;
pub mod scenarios;

use std::path::Path;

use thiserror::Error;

pub use config::{Kind, Overrides, Scenario};
pub use report::Report;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Core(#[from] evostab_core::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Parses, runs and emits one scenario; returns the report.
pub fn run_config(kind: Kind, text: &str, overrides: Overrides, out: &Path) -> Result<Report, HarnessError> {
    let scenario = config::parse_scenario(kind, text, overrides)?;
    let report = scenarios::run(&scenario)?;
    report.emit(out)?;
    Ok(report)
}

/// Caps rayon's global pool from `EVOSTAB_THREADS`, if set.
pub fn init_threads_from_env() -> Result<(), String> {
    match std::env::var("EVOSTAB_THREADS") {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|_| format!("EVOSTAB_THREADS must be a positive integer, got {v:?}"))?;
            if n == 0 {
                return Err("EVOSTAB_THREADS must be at least 1".into());
            }
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
        }
        Err(_) => Ok(()),
    }
}
