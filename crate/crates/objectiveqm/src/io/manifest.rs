//! Run manifests: enough to reproduce any run bit-identically. The manifest
//! snapshots the effective config (seed override already applied), names the
//! master seed, and digests every primary output.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::io::FORMAT_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    pub master_seed: u64,
    pub artifact_version: String,
    pub timestamp_unix_secs: u64,
    /// Effective config snapshot; replaying feeds this back to the command.
    pub config: serde_json::Value,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

pub fn build_manifest(
    command: &str,
    master_seed: u64,
    config: serde_json::Value,
    files: &[(String, Vec<u8>)],
) -> RunManifest {
    RunManifest {
        format_version: FORMAT_VERSION,
        command: command.to_string(),
        master_seed,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix_secs: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        config,
        outputs: files
            .iter()
            .map(|(name, bytes)| OutputDigest { file: name.clone(), sha256: sha256_hex(bytes) })
            .collect(),
    }
}
