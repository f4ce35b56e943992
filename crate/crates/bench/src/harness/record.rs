//! Newline-delimited JSON record files.
//!
//! One [`BenchRecord`] per line, one line per (model, image). Each line is
//! written with a single `write` call and flushed, so an interrupted run
//! leaves every completed record readable.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use srbench_core::{EvalCriteria, MetricResult};

use crate::error::{Error, Result};
use crate::runtime::{ReportedValues, TimingSample};

use super::dataset::sha256_hex;

pub const RECORD_VERSION: u32 = 1;

/// Identifies the harness build in fingerprints.
pub const HARNESS_VERSION: &str = concat!("srbench/", env!("CARGO_PKG_VERSION"));

/// Hash of the criteria and harness version. Records with equal
/// fingerprints were evaluated identically.
pub fn criteria_fingerprint(criteria: &EvalCriteria) -> String {
    let text = format!("{}\n{HARNESS_VERSION}", criteria.canonical_json());
    sha256_hex(text.as_bytes())[..16].to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub version: u32,
    pub model: String,
    pub dataset: String,
    pub scale: usize,
    pub image: String,
    pub self_ensemble: bool,
    /// In criteria order; empty for errored rows.
    pub metrics: Vec<MetricResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingSample>,
    pub fingerprint: String,
    /// Published values from the model config, carried verbatim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported: Option<ReportedValues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl BenchRecord {
    pub fn metric(&self, id: &str) -> Option<&MetricResult> {
        self.metrics.iter().find(|m| m.metric == id)
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

/// Appends records to an NDJSON file.
pub struct RecordWriter {
    path: PathBuf,
    file: File,
}

impl RecordWriter {
    /// Truncates an existing file unless `append` is set.
    pub fn create(path: impl AsRef<Path>, append: bool) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .append(append)
            .truncate(!append)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(Self { path, file })
    }

    pub fn write(&mut self, record: &BenchRecord) -> Result<()> {
        let mut line = serde_json::to_string(record).expect("record serializes");
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<BenchRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: BenchRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Records(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if rec.version != RECORD_VERSION {
            return Err(Error::Records(format!(
                "{}:{}: unsupported record version {}",
                path.display(),
                i + 1,
                rec.version
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Describes one run; written next to the record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub harness: String,
    pub fingerprint: String,
    pub criteria: EvalCriteria,
    pub models: Vec<String>,
    pub datasets: Vec<String>,
    pub scales: Vec<usize>,
    pub timing: bool,
    pub environment: String,
    /// Warnings raised while setting up the run, e.g. shaving that differs
    /// from what a model's authors used.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunManifest {
    /// `records.ndjson` -> `records.manifest.json`.
    pub fn path_for(records: &Path) -> PathBuf {
        records.with_extension("manifest.json")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
