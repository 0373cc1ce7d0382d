//! Per-directory run manifests. A stage whose configuration digest, input
//! digests and output files all match the manifest is skipped.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub stage: String,
    pub config_digest: String,
    /// Input name to digest.
    pub inputs: BTreeMap<String, String>,
    /// Output file (relative to the directory) to digest.
    pub outputs: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    /// Stage-specific records, e.g. one per simulation.
    #[serde(default)]
    pub entries: Vec<serde_json::Value>,
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> Result<String, CliError> {
    Ok(digest_bytes(&std::fs::read(path).map_err(CliError::io(path))?))
}

/// Digest of a value's canonical JSON plus the tool version.
pub fn digest_config<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("config serializes");
    digest_bytes(format!("{}\n{json}", env!("CARGO_PKG_VERSION")).as_bytes())
}

impl Manifest {
    pub fn new(stage: &str, config_digest: String, seeds: Vec<u64>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            stage: stage.to_string(),
            config_digest,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            seeds,
            entries: Vec::new(),
        }
    }

    pub fn load(dir: &Path) -> Result<Option<Manifest>, CliError> {
        let path = dir.join(FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| CliError::Config { path, message: format!("unreadable manifest: {e}") })
    }

    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(CliError::io(&path))
    }

    /// Record an output file already written under `dir`.
    pub fn add_output(&mut self, dir: &Path, rel: &str) -> Result<(), CliError> {
        self.outputs.insert(rel.to_string(), digest_file(&dir.join(rel))?);
        Ok(())
    }

    /// True when `dir` holds a manifest for the same stage, configuration
    /// and inputs, and every recorded output is intact.
    pub fn is_current(dir: &Path, stage: &str, config_digest: &str, inputs: &BTreeMap<String, String>) -> Result<bool, CliError> {
        let Some(m) = Manifest::load(dir)? else {
            return Ok(false);
        };
        if m.stage != stage || m.config_digest != config_digest || &m.inputs != inputs || m.tool_version != env!("CARGO_PKG_VERSION") {
            return Ok(false);
        }
        for (rel, d) in &m.outputs {
            let p = dir.join(rel);
            if !p.exists() || &digest_file(&p)? != d {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
