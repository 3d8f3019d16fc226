//! Run manifests: one JSON file per output set recording the resolved
//! configuration, so a run can be reproduced from its artifacts alone.

use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use crate::Result;

#[derive(Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Fully resolved flag values, not just what the user typed.
    pub config: serde_json::Value,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub wall_clock_ms: u128,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: serde_json::Value, seed: u64) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            config,
            seed,
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_ms: 0,
        }
    }

    pub fn write(mut self, dir: &Path, elapsed: Duration) -> Result<()> {
        self.wall_clock_ms = elapsed.as_millis();
        let body = serde_json::to_string_pretty(&self)
            .map_err(|e| crate::CliError::Runtime(e.to_string()))?;
        std::fs::write(dir.join("manifest.json"), body + "\n")?;
        Ok(())
    }
}
