use std::path::{Path, PathBuf};
use std::time::Instant;

use fraclap_core::json::to_sorted_string;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Record;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
/// Wall-clock timing; kept out of the hashed outputs so reruns stay
/// byte-identical.
pub const TIMING: &str = "timing.txt";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub scenario: String,
    pub verb: String,
    pub tool: String,
    pub version: String,
    /// Config exactly as read, by section and key.
    pub config: Record,
    /// Resolved values: grid ladder, cut-offs, numerical settings.
    pub parameters: serde_json::Value,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub timing: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn record_input(path: &Path) -> Result<FileRecord, CliError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(FileRecord { path: name, sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 })
}

/// A run directory being filled.
pub struct RunDir {
    dir: PathBuf,
    outputs: Vec<FileRecord>,
    started: Instant,
}

impl RunDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), outputs: Vec::new(), started: Instant::now() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.outputs.retain(|r| r.path != name);
        self.outputs.push(FileRecord { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        self.write(name, to_sorted_string(value)?.as_bytes())
    }

    /// Writes the manifest and timing file; returns every output path.
    pub fn finish(
        mut self,
        scenario: &str,
        verb: &str,
        config: Record,
        parameters: serde_json::Value,
        inputs: Vec<FileRecord>,
    ) -> Result<Vec<PathBuf>, CliError> {
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = ExperimentManifest {
            scenario: scenario.to_string(),
            verb: verb.to_string(),
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            parameters,
            inputs,
            outputs: self.outputs.clone(),
            timing: TIMING.to_string(),
        };
        let secs = self.started.elapsed().as_secs_f64();
        let timing = self.dir.join(TIMING);
        std::fs::write(&timing, format!("wall_clock_seconds {secs:.3}\n")).map_err(|e| io_err(&timing, e))?;
        let path = self.dir.join(MANIFEST);
        std::fs::write(&path, to_sorted_string(&manifest)?).map_err(|e| io_err(&path, e))?;
        let mut files: Vec<PathBuf> = self.outputs.iter().map(|r| self.dir.join(&r.path)).collect();
        files.push(path);
        Ok(files)
    }
}

/// Loads the manifest of a run directory and checks every output hash.
pub fn verify(dir: &Path) -> Result<ExperimentManifest, CliError> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("no manifest in {}: {e}", dir.display())))?;
    let manifest: ExperimentManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    for out in &manifest.outputs {
        let p = dir.join(&out.path);
        let bytes = std::fs::read(&p).map_err(|e| io_err(&p, e))?;
        if sha256_hex(&bytes) != out.sha256 {
            return Err(CliError::Io(format!("{} does not match its recorded hash", p.display())));
        }
    }
    Ok(manifest)
}
