use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::Failure;

/// Record of one run: what was asked for and what was written.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub config_hash: String,
    pub started_at: String,
    pub finished_at: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
    pub skipped_cells: usize,
}

impl RunManifest {
    pub fn start(command: &str, seed: u64, config: BTreeMap<String, String>, config_hash: String) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            config_hash,
            started_at: now(),
            finished_at: String::new(),
            status: "running".into(),
            error: None,
            artifacts: Vec::new(),
            skipped_cells: 0,
        }
    }

    /// `<stem>-<hash>.<ext>`, inside the run's output directory.
    pub fn artifact_name(&self, stem: &str, ext: &str) -> String {
        format!("{stem}-{}.{ext}", self.config_hash)
    }

    /// Writes `contents` under `dir` and records it.
    pub fn emit(&mut self, dir: &Path, stem: &str, ext: &str, contents: &[u8]) -> Result<PathBuf, Failure> {
        let name = self.artifact_name(stem, ext);
        let path = dir.join(&name);
        std::fs::write(&path, contents).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))?;
        self.artifacts.push(name);
        Ok(path)
    }

    /// Finalizes and writes `manifest-<command>-<hash>.json`.
    pub fn finish(mut self, dir: &Path, outcome: &Result<(), Failure>) -> Result<PathBuf, Failure> {
        self.finished_at = now();
        match outcome {
            Ok(()) => self.status = "ok".into(),
            Err(f) => {
                self.status = "failed".into();
                self.error = Some(f.message.clone());
            }
        }
        let path = dir.join(self.artifact_name(&format!("manifest-{}", self.command), "json"));
        let json = serde_json::to_string_pretty(&self).map_err(|e| Failure::runtime(e.to_string()))?;
        std::fs::write(&path, json + "\n").map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
