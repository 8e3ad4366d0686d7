//! Report envelopes: every CLI run emits a JSON document whose `meta`
//! block pins the tool version, the full parameter set, the measure file
//! hash, and wall time; `results` holds the numeric payload. Reruns with
//! identical inputs produce identical payloads (wall time lives in the
//! meta block only).

use crate::error::Result;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::Path;
use std::time::Instant;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Assembles the report envelope.
pub fn envelope<T: Serialize>(
    command: &str,
    params: Value,
    measure_sha256: Option<String>,
    started: Instant,
    results: &T,
) -> Result<Value> {
    Ok(json!({
        "meta": {
            "tool_version": TOOL_VERSION,
            "command": command,
            "params": params,
            "measure_sha256": measure_sha256,
            "wall_ms": started.elapsed().as_millis() as u64,
        },
        "results": serde_json::to_value(results)?,
    }))
}

/// Writes a JSON value atomically (temp file + rename).
pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    crate::io::write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_is_deterministic_in_payload() {
        let t0 = Instant::now();
        let a = envelope("energy", json!({"s": 2.0}), None, t0, &json!({"value": 5.0})).unwrap();
        let b = envelope("energy", json!({"s": 2.0}), None, t0, &json!({"value": 5.0})).unwrap();
        assert_eq!(a["results"], b["results"]);
        assert_eq!(a["meta"]["params"], b["meta"]["params"]);
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
