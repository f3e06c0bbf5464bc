//! Output persistence: every command writes its data files through a sink
//! that records path, size, and content digest, and closes the run with a
//! manifest listing them all.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub config_digest: String,
    /// Effective seed of the run; absent for seed-free commands.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub files: Vec<FileRecord>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub struct OutputSink {
    dir: PathBuf,
    files: Vec<FileRecord>,
    started_unix_ms: u64,
}

impl OutputSink {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| {
            CliError::Runtime(format!("cannot create output dir {}: {e}", dir.display()))
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            started_unix_ms: now_ms(),
        })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| {
            CliError::Runtime(format!("cannot write {}: {e}", path.display()))
        })?;
        self.files.push(FileRecord {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| CliError::Runtime(format!("cannot encode {name}: {e}")))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Serialize rows through the CSV writer (headers from field names,
    /// floats in round-trip decimal form).
    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.serialize(row)
                .map_err(|e| CliError::Runtime(format!("cannot encode {name}: {e}")))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Runtime(format!("cannot encode {name}: {e}")))?;
        self.write_bytes(name, &bytes)
    }

    /// Write the closing manifest and hand back the inventory.
    pub fn finish(
        self,
        subcommand: &str,
        config_digest: String,
        seed: Option<u64>,
    ) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            tool: "wustat",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            config_digest,
            seed,
            started_unix_ms: self.started_unix_ms,
            finished_unix_ms: now_ms(),
            files: self.files,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)
            .map_err(|e| CliError::Runtime(format!("cannot encode manifest: {e}")))?;
        bytes.push(b'\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, &bytes).map_err(|e| {
            CliError::Runtime(format!("cannot write {}: {e}", path.display()))
        })?;
        Ok(manifest)
    }
}
