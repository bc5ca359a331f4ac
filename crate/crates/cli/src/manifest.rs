//! Output directory handling and the reproducibility manifest.

use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_sha256: String,
    pub started_unix: u64,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Creates `dir`, refusing to reuse one that already holds a manifest unless
/// `force` is set.
pub fn prepare_dir(dir: &Path, force: bool) -> Result<PathBuf> {
    if dir.join(MANIFEST_NAME).exists() && !force {
        bail!("{} already holds results; pass --force to overwrite", dir.display());
    }
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.to_path_buf())
}

pub fn write_manifest(dir: &Path, command: &str, canonical_config: &str, started: SystemTime, elapsed: Duration, outputs: &[&str]) -> Result<()> {
    let manifest = Manifest {
        artifact: "blwp",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_sha256: sha256_hex(canonical_config),
        started_unix: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        wall_time_s: elapsed.as_secs_f64(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    };
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn refuses_second_run() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("run");
        prepare_dir(&dir, false).unwrap();
        write_manifest(&dir, "simulate", "", SystemTime::now(), Duration::ZERO, &[]).unwrap();
        assert!(prepare_dir(&dir, false).is_err());
        assert!(prepare_dir(&dir, true).is_ok());
    }
}
