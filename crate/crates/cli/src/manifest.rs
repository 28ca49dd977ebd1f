use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::settings::Settings;

/// Writes `manifest.json` describing the run: resolved configuration, its
/// hash, the global seed, format versions and the produced files.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    settings: &Settings,
    seed: u64,
    outputs: &[String],
) -> Result<(), CliError> {
    let config = settings.canonical_text();
    let hash = Sha256::digest(format!("{command}\n{config}").as_bytes());
    let hash: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    let mut outputs = outputs.to_vec();
    outputs.sort();
    let manifest = serde_json::json!({
        "command": command,
        "config": config,
        "config_hash": hash,
        "seed": seed,
        "versions": {
            "drleak": env!("CARGO_PKG_VERSION"),
            "shadow_format": drleak::shadow::SHADOW_VERSION,
            "checkpoint_format": drleak::reconnet::CHECKPOINT_VERSION,
        },
        "outputs": outputs,
    });
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}
