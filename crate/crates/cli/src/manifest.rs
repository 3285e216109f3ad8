use std::path::{Path, PathBuf};

use anyhow::Context;
use percept_core::catalog::CATALOG_VERSION;
use percept_core::perceiver::MODEL_FORMAT_VERSION;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub percept: String,
    pub catalog: String,
    pub model_format: u32,
}

impl Versions {
    pub fn current() -> Self {
        Self {
            percept: env!("CARGO_PKG_VERSION").to_string(),
            catalog: CATALOG_VERSION.to_string(),
            model_format: MODEL_FORMAT_VERSION,
        }
    }
}

/// Everything needed to reproduce a run. Holds no timestamps and no output
/// location, so repeated runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub subcommand: String,
    pub versions: Versions,
    pub catalog_hash: String,
    pub seed: u64,
    pub config: RunConfig,
    pub inputs: Vec<FileHash>,
    /// Paths relative to the run directory.
    pub outputs: Vec<FileHash>,
    pub warnings: Vec<String>,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Hashes a file, or every file below a directory in path order.
pub fn hash_entries(path: &Path, label: &str) -> anyhow::Result<Vec<FileHash>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        files.sort();
        let mut out = Vec::new();
        for f in files {
            let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            out.extend(hash_entries(&f, &format!("{label}/{name}"))?);
        }
        Ok(out)
    } else {
        Ok(vec![FileHash { path: label.to_string(), sha256: sha256_file(path)? }])
    }
}

impl Manifest {
    pub fn write(&self, run_dir: &Path) -> anyhow::Result<PathBuf> {
        let path = run_dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
