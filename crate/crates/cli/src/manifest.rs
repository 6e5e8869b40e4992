//! Run manifests: enough to re-execute a run and check that it reproduced
//! the same artifacts. The schema is described in `docs/manifest.md`.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Input role (e.g. `lexicon`) or, for outputs, the file name.
    pub name: String,
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub subcommand: String,
    pub config: PipelineConfig,
    pub config_sha256: String,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub threads: usize,
    pub started_unix_seconds: f64,
    pub wall_clock_seconds: f64,
    pub summary: serde_json::Value,
}

pub fn manifest_path(out_dir: &Path, subcommand: &str) -> PathBuf {
    out_dir.join(format!("{subcommand}.manifest.json"))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of the compact JSON form of the config.
pub fn config_hash(config: &PipelineConfig) -> String {
    sha256_bytes(&serde_json::to_vec(config).expect("config serializes"))
}

pub fn file_record(name: &str, path: &Path) -> Result<FileRecord, Failure> {
    let io = |e: std::io::Error| Failure::new("io", format!("{}: {e}", path.display()));
    let mut file = fs::File::open(path).map_err(io)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = file.read(&mut buf).map_err(io)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        bytes += n as u64;
    }
    Ok(FileRecord {
        name: name.to_owned(),
        path: path.to_owned(),
        sha256: hex::encode(hasher.finalize()),
        bytes,
    })
}

/// Records a file, or every regular file directly inside a directory in
/// name order.
pub fn input_records(name: &str, path: &Path) -> Result<Vec<FileRecord>, Failure> {
    if !path.is_dir() {
        return Ok(vec![file_record(name, path)?]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    files.iter().map(|f| file_record(name, f)).collect()
}

impl Manifest {
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf, Failure> {
        let path = manifest_path(out_dir, &self.subcommand);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text)
            .map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| Failure::new("manifest", format!("{}: {e}", path.display())))?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(Failure::new(
                "manifest",
                format!(
                    "{}: schema version {} is not supported",
                    path.display(),
                    manifest.schema_version
                ),
            ));
        }
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn config_hash_tracks_values() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.mine.threshold = 0.2;
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
