use std::fs;
use std::path::{Path, PathBuf};

use anticoncentration::persist::{self, sha256_hex, sidecar_path, Sidecar};
use serde::{Deserialize, Serialize};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::error::LabError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema: u32,
    pub experiment: String,
    pub config_digest: String,
    pub seed: u64,
    pub code_version: String,
    pub workers: usize,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<OutputFile>,
}

pub fn now() -> String {
    OffsetDateTime::now_utc().format(&Rfc3339).unwrap_or_else(|_| "unknown".into())
}

/// Collects the artifacts an experiment writes under one directory.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, LabError> {
        fs::create_dir_all(dir).map_err(|source| LabError::Output { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Records a CSV written elsewhere together with its sidecar.
    pub fn record_table(&mut self, name: &str) {
        self.files.push(name.to_string());
        let side = sidecar_path(Path::new(name));
        self.files.push(side.to_string_lossy().into_owned());
    }

    pub fn table<T: Serialize>(
        &mut self,
        name: &str,
        kind: &str,
        columns: &[&str],
        rows: &[T],
        metadata: serde_json::Value,
    ) -> Result<Sidecar, LabError> {
        let sidecar = persist::write_table(&self.path(name), kind, columns, rows, metadata)?;
        self.record_table(name);
        Ok(sidecar)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), LabError> {
        persist::write_json(&self.path(name), value)?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Hashes every recorded file and writes the manifest.
    pub fn finish(self, mut manifest: RunManifest) -> Result<RunManifest, LabError> {
        manifest.outputs = self
            .files
            .iter()
            .map(|f| {
                let path = self.dir.join(f);
                let bytes = fs::read(&path).map_err(|source| LabError::Output { path, source })?;
                Ok(OutputFile { file: f.clone(), sha256: sha256_hex(&bytes) })
            })
            .collect::<Result<_, LabError>>()?;
        manifest.finished_at = now();
        persist::write_json(&self.dir.join(MANIFEST_FILE), &manifest)?;
        Ok(manifest)
    }
}
