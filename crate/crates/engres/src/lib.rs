//! Scenario harness for engineered-reservoir simulations: JSON scenario
//! files, scenario runners, parallel sweeps and CSV/JSON run records.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod scenarios;
pub mod summary;

pub use config::{parse_config, Resolved, Scenario, ScenarioName};
pub use error::{HarnessError, Result};
pub use runner::{execute, RunOutput};
pub use summary::{RunSummary, Series};

use std::path::{Path, PathBuf};

/// Runs a scenario and writes its record under `out`.
pub fn run_scenario(s: &Scenario, out: &Path, workers: usize) -> Result<(RunOutput, PathBuf)> {
    let run = execute(s, workers)?;
    let dir = output::write_run(out, &run)?;
    Ok((run, dir))
}
