use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Everything needed to rerun a command, written as `manifest.json` next to
/// its outputs. The timestamp and wall time are the only fields that change
/// between identical runs.
#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    argv: Vec<String>,
    settings: serde_json::Value,
    inputs: Vec<String>,
    outputs: Vec<String>,
    wall_ms: f64,
    timestamp: String,
}

pub struct Run<'a> {
    pub command: &'a str,
    pub settings: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_ms: f64,
}

pub fn write(dir: &Path, run: Run<'_>) -> Result<()> {
    let manifest = Manifest {
        tool: "cablecal",
        version: env!("CARGO_PKG_VERSION"),
        command: run.command,
        argv: std::env::args().collect(),
        settings: run.settings,
        inputs: run.inputs,
        outputs: run.outputs,
        wall_ms: run.wall_ms,
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
