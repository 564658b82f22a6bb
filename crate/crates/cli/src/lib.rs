//! Scenario files, the runner behind the `rai` binary, and the bundled catalog.

pub mod bundled;
pub mod error;
pub mod runner;
pub mod scenario;

pub use error::CliError;
pub use runner::{run, write_outputs, Artifact, Format, Outcome};
pub use scenario::{Scenario, ScenarioKind};

use std::path::Path;

/// Resolves a file path or a bundled scenario name, trying the file first.
pub fn load(spec: &str) -> Result<Scenario, CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        return Scenario::parse(&text);
    }
    bundled::get(spec).ok_or_else(|| CliError::NotFound(spec.to_string()))
}
