use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Record of one run. Every field except the timestamps determines the
/// outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: &'static str,
    pub input_digest: Option<String>,
    pub outputs: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn new(command: &str, config: &serde_json::Value, seed: u64, input: Option<&[u8]>, started: u64) -> Self {
        let canonical = serde_json::to_vec(config).expect("config serializes");
        RunManifest {
            schema: "mwboot.manifest/1",
            command: command.into(),
            config_hash: sha256_hex(&canonical),
            seed,
            version: VERSION,
            input_digest: input.map(sha256_hex),
            outputs: Vec::new(),
            started_unix: started,
            finished_unix: started,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
