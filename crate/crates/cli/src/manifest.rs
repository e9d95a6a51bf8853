//! Per-run manifest: resolved parameters (with their provenance), input and
//! output paths, seed, and sha256 checksums of every artifact. Replaying a
//! manifest must reproduce byte-identical CSV/JSON outputs.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamValue {
    pub value: String,
    /// "cli" | "config" | "default"
    pub source: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: BTreeMap<String, ParamValue>,
    pub inputs: Vec<String>,
    pub outputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            params: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: BTreeMap::new(),
            seed: None,
        }
    }

    pub fn set_param(&mut self, key: &str, value: impl ToString, source: &str) {
        self.params.insert(
            key.to_string(),
            ParamValue {
                value: value.to_string(),
                source: source.to_string(),
            },
        );
    }

    /// Register an output file and record its checksum.
    pub fn add_output(&mut self, path: &Path) -> io::Result<()> {
        let bytes = std::fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        self.outputs.insert(
            path.file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            hex_string(&digest),
        );
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

pub fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Checksum a file the same way manifests do.
pub fn sha256_file(path: &Path) -> io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex_string(&Sha256::digest(&bytes)))
}
