//! CSV and JSON artifacts. Every CSV gets a sidecar `<file>.meta.json`
//! recording its columns, row count and a git-style content hash; loading
//! checks the hash and saving a loaded table reproduces it byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{OverlapSampleSet, SampleMeta};
use crate::error::{Error, Result};
use crate::replica::{AnnealedRow, AnnealedSeries};

pub const SIDECAR_SCHEMA: u32 = 1;

/// `sha256` of `"blob <len>\0" ++ bytes`, the object hash git uses in its
/// SHA-256 repository format.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    format!("sha256:{}", crate::circuit::hex(&h.finalize()))
}

/// Plain `sha256` of a byte string, hex encoded.
pub fn sha256_hex(bytes: &[u8]) -> String {
    crate::circuit::hex(&Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub schema: u32,
    pub kind: String,
    pub file: String,
    pub columns: Vec<String>,
    pub rows: usize,
    pub content_hash: String,
    pub metadata: serde_json::Value,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    csv.with_file_name(name)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Serializes rows to CSV bytes with a header row taken from the field
/// names.
pub fn csv_bytes<T: Serialize>(rows: &[T], columns: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(columns).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| Error::Parse(e.to_string()))
}

/// Writes `rows` to `path` and the sidecar next to it.
pub fn write_table<T: Serialize>(
    path: &Path,
    kind: &str,
    columns: &[&str],
    rows: &[T],
    metadata: serde_json::Value,
) -> Result<Sidecar> {
    let bytes = csv_bytes(rows, columns)?;
    fs::write(path, &bytes)?;
    let sidecar = Sidecar {
        schema: SIDECAR_SCHEMA,
        kind: kind.to_string(),
        file: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows: rows.len(),
        content_hash: content_hash(&bytes),
        metadata,
    };
    write_json(&sidecar_path(path), &sidecar)?;
    Ok(sidecar)
}

/// Reads a table written by [`write_table`], checking header, row count
/// and content hash against the sidecar.
pub fn read_table<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<(Vec<T>, Sidecar)> {
    let bytes = fs::read(path)?;
    let sidecar: Sidecar = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    if sidecar.kind != kind {
        return Err(Error::Parse(format!("{} holds `{}`, expected `{kind}`", path.display(), sidecar.kind)));
    }
    let hash = content_hash(&bytes);
    if hash != sidecar.content_hash {
        return Err(Error::Parse(format!(
            "{}: content hash {hash} does not match the sidecar ({})",
            path.display(),
            sidecar.content_hash
        )));
    }
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    if header != sidecar.columns {
        return Err(Error::Parse(format!("{}: header {header:?} differs from the sidecar", path.display())));
    }
    let rows: Vec<T> = r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_error)?;
    if rows.len() != sidecar.rows {
        return Err(Error::Parse(format!(
            "{}: {} rows, sidecar says {}",
            path.display(),
            rows.len(),
            sidecar.rows
        )));
    }
    Ok((rows, sidecar))
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, json_bytes(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

#[derive(Serialize, Deserialize)]
struct OmegaRow {
    omega: f64,
}

#[derive(Serialize, Deserialize)]
struct OverlapMeta {
    spec_digest: String,
    seed: u64,
    mode: String,
    realizations: usize,
    count: usize,
}

pub const OVERLAP_KIND: &str = "overlap-samples";
pub const ANNEALED_KIND: &str = "annealed-series";
pub const ANNEALED_COLUMNS: [&str; 8] = [
    "ensemble",
    "N",
    "t",
    "annealed_I2",
    "annealed_purity",
    "delta_S2",
    "method",
    "trunc_error",
];

pub fn save_overlaps(set: &OverlapSampleSet, path: &Path) -> Result<Sidecar> {
    let rows: Vec<OmegaRow> = set.samples.iter().map(|&omega| OmegaRow { omega }).collect();
    let meta = OverlapMeta {
        spec_digest: set.meta.spec_digest.clone(),
        seed: set.meta.seed,
        mode: set.meta.mode.clone(),
        realizations: set.meta.realizations,
        count: set.len(),
    };
    write_table(path, OVERLAP_KIND, &["omega"], &rows, serde_json::to_value(meta)?)
}

pub fn load_overlaps(path: &Path) -> Result<OverlapSampleSet> {
    let (rows, sidecar): (Vec<OmegaRow>, _) = read_table(path, OVERLAP_KIND)?;
    let meta: OverlapMeta = serde_json::from_value(sidecar.metadata)?;
    OverlapSampleSet::new(
        rows.into_iter().map(|r| r.omega).collect(),
        SampleMeta {
            spec_digest: meta.spec_digest,
            mode: meta.mode,
            realizations: meta.realizations,
            seed: meta.seed,
        },
    )
}

pub fn save_annealed(series: &AnnealedSeries, path: &Path, metadata: serde_json::Value) -> Result<Sidecar> {
    write_table(path, ANNEALED_KIND, &ANNEALED_COLUMNS, &series.rows, metadata)
}

pub fn load_annealed(path: &Path) -> Result<(AnnealedSeries, Sidecar)> {
    let (rows, sidecar): (Vec<AnnealedRow>, _) = read_table(path, ANNEALED_KIND)?;
    let ensemble = rows
        .first()
        .map(|r| r.ensemble)
        .ok_or_else(|| Error::EmptySample(format!("{} has no rows", path.display())))?;
    Ok((AnnealedSeries { ensemble, rows }, sidecar))
}
