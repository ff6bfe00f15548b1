//! Atomic file output and the per-command manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::LoadedConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Records every file a command reads or writes so each artifact can be
/// traced back to the scenario hash. Contains no timestamps, so reruns
/// produce identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_path: String,
    pub config_sha256: String,
    pub overrides: Vec<String>,
    pub config: serde_json::Value,
    pub derived: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<serde_json::Value>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &LoadedConfig, overrides: Vec<String>) -> Self {
        Self {
            tool: "motionsnap",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config_path: cfg.path.display().to_string(),
            config_sha256: cfg.sha256.clone(),
            overrides,
            config: serde_json::to_value(&cfg.config).unwrap_or_default(),
            derived: cfg.derived(),
            plan: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::runtime(path.display(), e))?;
        self.inputs.push(record(path, &bytes));
        Ok(())
    }

    /// Writes `bytes` to `dir/name` atomically and records it.
    pub fn write(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        self.outputs.push(record(&path, bytes));
        Ok(path)
    }

    pub fn finish(self, dir: &Path, name: &str) -> Result<(), CliError> {
        let mut json =
            serde_json::to_vec_pretty(&self).map_err(|e| CliError::runtime("manifest", e))?;
        json.push(b'\n');
        write_atomic(&dir.join(name), &json)
    }
}

fn record(path: &Path, bytes: &[u8]) -> FileRecord {
    FileRecord {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(bytes)),
        bytes: bytes.len() as u64,
    }
}

/// Temp file in the target directory, then rename over the destination.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::runtime(dir.display(), e))?;
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::runtime(dir.display(), e))?;
    tmp.write_all(bytes)
        .map_err(|e| CliError::runtime(path.display(), e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))
            .map_err(|e| CliError::runtime(path.display(), e))?;
    }
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::runtime(path.display(), e))?;
    tmp.persist(path)
        .map_err(|e| CliError::runtime(path.display(), e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested").join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        let entries = std::fs::read_dir(p.parent().unwrap()).unwrap().count();
        assert_eq!(entries, 1);
    }

    #[test]
    fn record_hashes_content() {
        let r = record(Path::new("x"), b"abc");
        assert_eq!(
            r.sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(r.bytes, 3);
    }
}
