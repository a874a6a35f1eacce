//! Per-phase manifests: input digests, a config digest, and counters.
//! Together they form the artifact DAG — a phase is a no-op when its
//! recorded digests still match, and tampering with any upstream artifact
//! changes a digest and invalidates everything downstream.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn sha256_bytes(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{:02x}", b)).collect()
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buffer = [0u8; 64 * 1024];
    loop {
        let read = file.read(&mut buffer)?;
        if read == 0 {
            break;
        }
        hasher.update(&buffer[..read]);
    }
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{:02x}", b)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub phase: String,
    /// Input file name → content digest.
    pub inputs: BTreeMap<String, String>,
    /// Digest of the config section(s) this phase depends on.
    pub config_digest: String,
    pub counters: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut body = serde_json::to_string_pretty(self)?;
        body.push('\n');
        std::fs::write(path, body)
    }

    pub fn read(path: &Path) -> Option<Manifest> {
        let body = std::fs::read_to_string(path).ok()?;
        serde_json::from_str(&body).ok()
    }

    /// True when the recorded inputs and config digest match the current
    /// state on disk.
    pub fn still_valid(&self, config_digest: &str) -> bool {
        if self.config_digest != config_digest {
            return false;
        }
        self.inputs.iter().all(|(name, digest)| {
            sha256_file(Path::new(name)).is_ok_and(|current| current == *digest)
        })
    }
}
