//! CSV rendering and artifact export with a digest manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.json";

/// Formats a number with 12 significant digits, independent of locale.
/// Non-finite values (masked cells) are written as `nan`.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        "nan".to_string()
    }
}

/// A named output file held in memory until export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

/// Builds a CSV table with `#`-prefixed metadata lines above the header.
#[derive(Debug, Clone)]
pub struct CsvTable {
    metadata: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.push((key.to_string(), value.into()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn into_artifact(self, name: &str) -> CliResult<Artifact> {
        let mut out = Vec::new();
        for (key, value) in &self.metadata {
            writeln!(out, "# {key}: {value}").expect("writing to memory");
        }
        let mut writer = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| CliError::io(format!("formatting {name}"), e.into());
        writer.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(|v| fmt_num(*v))).map_err(csv_err)?;
        }
        let contents = writer
            .into_inner()
            .map_err(|e| CliError::io(format!("formatting {name}"), e.into_error()))?;
        Ok(Artifact {
            name: name.to_string(),
            contents,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Completion record of a run; written last.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub timestamp: String,
    pub seed: u64,
    pub config: Value,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn new(scenario: &str, seed: u64, config: Value) -> Self {
        Self {
            tool: "kiparc".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: scenario.to_string(),
            timestamp: humantime::format_rfc3339_seconds(SystemTime::now()).to_string(),
            seed,
            config,
            files: Vec::new(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `artifacts` into `dir`, then the manifest.
///
/// Existing files are only replaced with `force`; a stale manifest is
/// removed before anything else is written so an interrupted run never
/// looks complete. On any failure the files written by this call are
/// removed again.
pub fn export_artifacts(
    artifacts: &[Artifact],
    dir: &Path,
    force: bool,
    mut manifest: RunManifest,
) -> CliResult<RunManifest> {
    if artifacts.is_empty() {
        return Err(CliError::config("$", "scenario produced no outputs"));
    }
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;

    let manifest_path = dir.join(MANIFEST_NAME);
    let targets: Vec<PathBuf> = artifacts.iter().map(|a| dir.join(&a.name)).collect();
    if !force {
        if let Some(existing) = targets
            .iter()
            .chain(std::iter::once(&manifest_path))
            .find(|p| p.exists())
        {
            return Err(CliError::WouldOverwrite(existing.clone()));
        }
    }
    if manifest_path.exists() {
        fs::remove_file(&manifest_path)
            .map_err(|e| CliError::io(format!("removing stale {}", manifest_path.display()), e))?;
    }

    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        for (artifact, path) in artifacts.iter().zip(&targets) {
            fs::write(path, &artifact.contents).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
            written.push(path.clone());
            manifest.files.push(FileEntry {
                name: artifact.name.clone(),
                bytes: artifact.contents.len(),
                sha256: sha256_hex(&artifact.contents),
            });
        }
        let mut json = serde_json::to_vec_pretty(&manifest)
            .map_err(|e| CliError::io("serializing manifest", e.into()))?;
        json.push(b'\n');
        let tmp = dir.join(format!("{MANIFEST_NAME}.tmp"));
        fs::write(&tmp, &json).map_err(|e| CliError::io(format!("writing {}", tmp.display()), e))?;
        written.push(tmp.clone());
        fs::rename(&tmp, &manifest_path)
            .map_err(|e| CliError::io(format!("finalizing {}", manifest_path.display()), e))?;
        Ok(())
    })();

    match result {
        Ok(()) => Ok(manifest),
        Err(e) => {
            for path in written {
                let _ = fs::remove_file(path);
            }
            Err(e)
        }
    }
}
