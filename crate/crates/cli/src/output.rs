//! CSV sample files and `summary.json`.
//!
//! Every CSV starts with two comment lines: `# schema=bbmlab/<name>/<version>`
//! and `# config=<canonical JSON>`. The summary lists estimates, the config,
//! its fingerprint and a content hash of each CSV written alongside it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use bbmlab::stats::EstimateCI;

use crate::config::ExperimentConfig;

pub const SUMMARY_SCHEMA: &str = "bbmlab/summary/1";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Hash of `bytes` framed as a git blob.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex(&h.finalize())
}

/// Canonical JSON of the config: keys sorted, no whitespace.
pub fn canonical_config(config: &ExperimentConfig) -> String {
    let v = serde_json::to_value(config).expect("config serializes");
    serde_json::to_string(&v).expect("value serializes")
}

pub fn config_fingerprint(config: &ExperimentConfig) -> String {
    sha256_hex(canonical_config(config).as_bytes())
}

/// In-memory CSV with the versioned header, written in one piece.
pub struct CsvTable {
    name: &'static str,
    writer: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new(name: &'static str, config: &ExperimentConfig, columns: &[&str]) -> Result<Self, OutputError> {
        let mut head = format!("# schema=bbmlab/{name}/1\n# config={}\n", canonical_config(config)).into_bytes();
        head.reserve(1 << 16);
        let mut writer = csv::Writer::from_writer(head);
        writer.write_record(columns)?;
        Ok(Self { name, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), OutputError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn into_bytes(self) -> Result<Vec<u8>, OutputError> {
        self.writer.into_inner().map_err(|e| OutputError::Csv(e.into_error().into()))
    }

    pub fn name(&self) -> &'static str {
        self.name
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| OutputError::Io { path: dir.into(), source })?;
    }
    fs::write(path, bytes).map_err(|source| OutputError::Io { path: path.into(), source })
}

/// JSON has no NaN; it is written as `null` and read back here.
fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn nan_map<'de, D: serde::Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
    let m = BTreeMap::<String, Option<f64>>::deserialize(d)?;
    Ok(m.into_iter().map(|(k, v)| (k, v.unwrap_or(f64::NAN))).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    /// Series the estimate belongs to, e.g. `tail` or `offset`.
    pub kind: String,
    /// Abscissa within the series (`n`, `x`, `t` or `λ`).
    pub at: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub value: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub stderr: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub lower: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub upper: f64,
    pub level: f64,
    pub n: u64,
}

impl Estimate {
    pub fn from_ci(kind: &str, at: f64, e: &EstimateCI) -> Self {
        Self {
            name: format!("{kind}@{at}"),
            kind: kind.into(),
            at,
            value: e.value,
            stderr: e.stderr,
            lower: e.lower,
            upper: e.upper,
            level: e.level,
            n: e.n_samples,
        }
    }

    /// A value without sampling error.
    pub fn plain(kind: &str, at: f64, value: f64, n: u64) -> Self {
        Self::from_ci(kind, at, &EstimateCI { value, stderr: 0.0, lower: value, upper: value, level: 1.0, n_samples: n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub file: String,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub command: String,
    pub config: serde_json::Value,
    pub config_fingerprint: String,
    pub inputs: Vec<InputHash>,
    pub estimates: Vec<Estimate>,
    #[serde(deserialize_with = "nan_map")]
    pub diagnostics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl Summary {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            schema: SUMMARY_SCHEMA.into(),
            command: config.command.clone(),
            config: serde_json::to_value(config).expect("config serializes"),
            config_fingerprint: config_fingerprint(config),
            inputs: Vec::new(),
            estimates: Vec::new(),
            diagnostics: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn estimate(&mut self, kind: &str, at: f64, e: &EstimateCI) {
        self.estimates.push(Estimate::from_ci(kind, at, e));
    }

    pub fn diagnostic(&mut self, name: &str, value: f64) {
        self.diagnostics.insert(name.into(), value);
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    /// Writes `table` as `<dir>/<file>` and records its hash.
    pub fn write_table(&mut self, dir: &Path, file: &str, table: CsvTable) -> Result<PathBuf, OutputError> {
        let bytes = table.into_bytes()?;
        let path = dir.join(file);
        write_file(&path, &bytes)?;
        self.inputs.push(InputHash { file: file.into(), hash: content_hash(&bytes) });
        Ok(path)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, OutputError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        let path = dir.join(SUMMARY_FILE);
        write_file(&path, text.as_bytes())?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, OutputError> {
        let text = fs::read_to_string(path).map_err(|source| OutputError::Io { path: path.into(), source })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn series(&self, kind: &str) -> impl Iterator<Item = &Estimate> + '_ {
        let kind = kind.to_string();
        self.estimates.iter().filter(move |e| e.kind == kind)
    }

    pub fn config_f64(&self, key: &str) -> Option<f64> {
        self.config.get(key).and_then(|v| v.as_f64())
    }
}

/// Shortest round-trip decimal for floats in CSV cells.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Overrides;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig::resolve("sim-n", Overrides { seed: Some(5), ..Default::default() }).unwrap()
    }

    #[test]
    fn git_blob_hash_framing() {
        // sha256 of "blob 0\0"
        assert_eq!(content_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
    }

    #[test]
    fn csv_has_versioned_header() {
        let mut t = CsvTable::new("n_samples", &cfg(), &["a", "b"]).unwrap();
        t.row(["1", "2"]).unwrap();
        let text = String::from_utf8(t.into_bytes().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# schema=bbmlab/n_samples/1");
        assert!(lines[1].starts_with("# config={\"barrier\":12.0,"));
        assert_eq!(&lines[2..], ["a,b", "1,2"]);
    }

    #[test]
    fn summary_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Summary::new(&cfg());
        s.estimate("tail", 10.0, &EstimateCI::normal(0.5, 0.1, 100));
        s.diagnostic("work_capped_fraction", 0.0);
        let path = s.write(dir.path()).unwrap();
        let back = Summary::read(&path).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.series("tail").count(), 1);
        assert_eq!(back.config_f64("barrier"), Some(12.0));
        s.estimate("ratio_median", 3.0, &EstimateCI { stderr: f64::NAN, ..EstimateCI::normal(1.0, 0.0, 5) });
        s.write(dir.path()).unwrap();
        assert!(Summary::read(&path).unwrap().estimates[1].stderr.is_nan());
    }
}
