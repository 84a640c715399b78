//! Atomic artifact writes and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] trust_recon::Error),
    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: trust_recon::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(trust_recon::Error::Config(_)) => 1,
            CliError::Core(_) | CliError::Input { .. } => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes through a temporary sibling and renames it into place, so readers
/// never observe a half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Collects the effective configuration and every emitted artifact.
pub struct RunManifest {
    command: &'static str,
    config: Map<String, Value>,
    artifacts: Vec<(PathBuf, String)>,
    started: Instant,
}

impl RunManifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            config: Map::new(),
            artifacts: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn config(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.config.insert(key.to_string(), value.into());
        self
    }

    /// Writes every artifact into `out` once all of them have been rendered;
    /// nothing is written if the directory cannot be created.
    pub fn emit(&mut self, out: &Path, files: Vec<(&str, String)>) -> Result<(), CliError> {
        fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        for (name, body) in files {
            let path = out.join(name);
            write_atomic(&path, body.as_bytes())?;
            self.artifacts.push((path, sha256_hex(body.as_bytes())));
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let artifacts: Vec<Value> = self
            .artifacts
            .iter()
            .map(|(p, sum)| json!({ "path": p.display().to_string(), "sha256": sum }))
            .collect();
        let manifest = json!({
            "command": self.command,
            "config": self.config,
            "artifacts": artifacts,
            "wall_time_secs": self.started.elapsed().as_secs_f64(),
        });
        serde_json::to_string_pretty(&manifest).expect("manifest is valid json")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(CliError::Core(trust_recon::Error::Config("x".into())).exit_code(), 1);
        assert_eq!(CliError::Core(trust_recon::Error::Data("x".into())).exit_code(), 2);
        let io = std::io::Error::other("x");
        assert_eq!(CliError::io(Path::new("p"), io).exit_code(), 3);
    }
}
