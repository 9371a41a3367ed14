//! Run manifests: every output file is accompanied by a record of the exact
//! invocation, seeds, input hashes and output hashes that produced it, so
//! any randomized pipeline can be reproduced byte for byte (the timestamp is
//! the only field expected to differ between reruns).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fail::{CliError, CliResult};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            argv: std::env::args().collect(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn record_input(&mut self, path: &Path) -> CliResult<()> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::user(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path, bytes: &[u8]) {
        self.outputs.insert(path.display().to_string(), sha256_hex(bytes));
    }

    /// Write the manifest next to `out` as `<stem>.manifest.json`.
    pub fn write_beside(&self, out: &Path) -> CliResult<PathBuf> {
        let path = manifest_path(out);
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::internal(format!("manifest serialization: {e}")))?;
        crate::fsutil::write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}.manifest.json"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
