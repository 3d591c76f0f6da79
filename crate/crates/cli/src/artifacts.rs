//! Artifact emission with a provenance manifest.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Serialize)]
struct ArtifactRow {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: serde_json::Value,
    seed: u64,
    wall_time_s: f64,
    artifacts: Vec<ArtifactRow>,
}

pub struct Emitter {
    command: String,
    config: serde_json::Value,
    seed: u64,
    started: Instant,
    artifacts: Vec<ArtifactRow>,
}

impl Emitter {
    pub fn new(command: &str, config: serde_json::Value, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config,
            seed,
            started: Instant::now(),
            artifacts: Vec::new(),
        }
    }

    /// Write one artifact file and record its checksum.
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), String> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
            }
        }
        std::fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        let digest = hasher.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.artifacts.push(ArtifactRow {
            path: path.display().to_string(),
            sha256: hex,
            bytes: bytes.len(),
        });
        Ok(())
    }

    /// Write the manifest next to the primary artifact.
    pub fn finish(self, primary: &Path) -> Result<(), String> {
        let manifest_path = manifest_path_for(primary);
        let manifest = Manifest {
            tool: "reeblab",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            config: self.config,
            seed: self.seed,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            artifacts: self.artifacts,
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| format!("manifest serialization: {e}"))?;
        std::fs::write(&manifest_path, text.as_bytes())
            .map_err(|e| format!("cannot write {}: {e}", manifest_path.display()))?;
        Ok(())
    }
}

pub fn manifest_path_for(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    primary.with_file_name(name)
}

/// Default output path: `$REEBLAB_OUT_DIR/<name>` when the variable is
/// set, else `<name>` in the working directory.
pub fn default_out(name: &str) -> PathBuf {
    match std::env::var_os("REEBLAB_OUT_DIR") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(name),
        _ => PathBuf::from(name),
    }
}
