use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to re-run a command: its arguments, the resolved
/// configuration, the seeds it consumed and the files it wrote.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<PathBuf>,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
}

pub struct ManifestBuilder {
    command: String,
    argv: Vec<String>,
    started_unix_s: u64,
    started: Instant,
}

impl ManifestBuilder {
    pub fn start(command: &str) -> Self {
        Self {
            command: command.to_string(),
            argv: std::env::args().collect(),
            started_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            started: Instant::now(),
        }
    }

    pub fn finish(self, config: Value, seeds: Vec<u64>, artifacts: Vec<PathBuf>) -> RunManifest {
        RunManifest {
            version: version_string(),
            command: self.command,
            argv: self.argv,
            config,
            seeds,
            artifacts,
            started_unix_s: self.started_unix_s,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
        }
    }
}

pub fn version_string() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

impl RunManifest {
    pub fn write(&self, out_dir: &Path) -> anyhow::Result<PathBuf> {
        let path = out_dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
