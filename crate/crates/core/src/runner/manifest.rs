//! Run manifests: configuration hash, seed ledger and output inventory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ParamSource;
use crate::error::{LabError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One output file, relative to the run directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileRecord {
    pub fn of(dir: &Path, rel: &Path) -> Result<Self> {
        let data = fs::read(dir.join(rel))?;
        Ok(Self { path: rel.to_string_lossy().replace('\\', "/"), sha256: sha256_hex(&data), bytes: data.len() as u64 })
    }

    /// Checks that the file exists under `dir` with the recorded content.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        let path = dir.join(&self.path);
        let data = fs::read(&path).map_err(|_| LabError::MissingArtifact(path.display().to_string()))?;
        if sha256_hex(&data) != self.sha256 {
            return Err(LabError::MissingArtifact(format!("{} does not match its recorded hash", path.display())));
        }
        Ok(())
    }
}

/// Seeds of the replicate environments of one task.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLedgerEntry {
    pub task: String,
    /// Seed domain: the size index, or a reserved label for tasks not tied
    /// to a size.
    pub domain: u64,
    #[serde(default)]
    pub size: Option<u64>,
    pub seeds: Vec<u64>,
}

/// An estimator that did not complete.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncompleteTask {
    pub task: String,
    pub error: String,
    pub exit_code: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the resolved `config.json`.
    pub config_sha256: String,
    pub started: String,
    pub finished: String,
    pub workers: usize,
    /// Source of each top-level configuration value.
    pub provenance: BTreeMap<String, ParamSource>,
    pub estimators: Vec<String>,
    pub seed_ledger: Vec<SeedLedgerEntry>,
    pub files: Vec<FileRecord>,
    pub incomplete: Vec<IncompleteTask>,
    #[serde(default)]
    pub report_files: Vec<FileRecord>,
}

impl RunManifest {
    pub fn is_complete(&self) -> bool {
        self.incomplete.is_empty()
    }

    /// 0 on success; 4 if a resource cap stopped any task, else 3 for a
    /// degenerate ensemble, else the first failing task's code.
    pub fn exit_code(&self) -> i32 {
        let codes: Vec<i32> = self.incomplete.iter().map(|t| t.exit_code).collect();
        if codes.is_empty() {
            0
        } else if codes.contains(&4) {
            4
        } else if codes.contains(&3) {
            3
        } else {
            codes[0]
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    /// Reads `manifest.json` from a run directory or from an explicit path.
    pub fn load(path: &Path) -> Result<(Self, std::path::PathBuf)> {
        let (file, dir) = if path.is_dir() {
            (path.join(MANIFEST_FILE), path.to_path_buf())
        } else {
            (path.to_path_buf(), path.parent().map_or_else(|| ".".into(), |p| p.to_path_buf()))
        };
        let text = fs::read_to_string(&file).map_err(|_| LabError::MissingArtifact(file.display().to_string()))?;
        let manifest = serde_json::from_str(&text).map_err(|e| LabError::Format(format!("{}: {e}", file.display())))?;
        Ok((manifest, dir))
    }

    pub fn file(&self, name: &str) -> Option<&FileRecord> {
        self.files.iter().find(|f| f.path == name)
    }
}
