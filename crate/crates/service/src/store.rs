//! Named scenarios persisted as one canonical JSON file each, plus an
//! `index.json` summary. Writes go through a temp file and an atomic rename
//! while holding the store's write lock, so readers never see a torn file
//! and concurrent updates of one record serialize.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use chrono::{DateTime, Utc};
use flmarket_core::document::ScenarioDocument;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const INDEX_FILE: &str = "index.json";
const MAX_NAME_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRecord {
    pub name: String,
    pub version: u64,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub scenario: ScenarioDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSummary {
    pub name: String,
    pub version: u64,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl From<&ScenarioRecord> for RecordSummary {
    fn from(r: &ScenarioRecord) -> Self {
        Self { name: r.name.clone(), version: r.version, created_at: r.created_at, updated_at: r.updated_at }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("invalid scenario name {0:?}: use 1-64 ASCII letters, digits, '-' or '_'")]
    InvalidName(String),
    #[error("no scenario named {0:?}")]
    NotFound(String),
    #[error("version conflict on {name:?}: expected {expected:?}, current {current:?}")]
    VersionConflict { name: String, expected: Option<u64>, current: Option<u64> },
    #[error("stored scenario {path} is invalid: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("scenario rejected: {0}")]
    Invalid(#[from] flmarket_core::Error),
    #[error("store i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub fn validate_name(name: &str) -> Result<(), StoreError> {
    let ok = !name.is_empty()
        && name.len() <= MAX_NAME_LEN
        && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidName(name.to_string()))
    }
}

pub struct ScenarioStore {
    dir: PathBuf,
    records: RwLock<BTreeMap<String, ScenarioRecord>>,
    tmp_counter: AtomicU64,
}

impl ScenarioStore {
    /// Opens (creating if needed) the store at `dir`, loading and
    /// re-validating every stored record.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut records = BTreeMap::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            let Some(file) = path.file_name().and_then(|f| f.to_str()) else { continue };
            if file == INDEX_FILE || file.starts_with('.') {
                continue;
            }
            let Some(stem) = file.strip_suffix(".json") else { continue };
            let record = load_record(&path)?;
            if record.name != stem {
                return Err(corrupt(&path, format!("record name {:?} does not match file name", record.name)));
            }
            records.insert(record.name.clone(), record);
        }
        let store = Self { dir, records: RwLock::new(records), tmp_counter: AtomicU64::new(0) };
        store.write_index(&store.records.read().expect("store lock poisoned"))?;
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn list(&self) -> Vec<RecordSummary> {
        self.records.read().expect("store lock poisoned").values().map(RecordSummary::from).collect()
    }

    pub fn get(&self, name: &str) -> Result<ScenarioRecord, StoreError> {
        validate_name(name)?;
        self.records
            .read()
            .expect("store lock poisoned")
            .get(name)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(name.to_string()))
    }

    /// Creates or updates `name`. A new record needs `expected_version` of
    /// `None` or `Some(0)`; an existing one needs its current version.
    /// Returns the stored record and whether it was created.
    pub fn put(
        &self,
        name: &str,
        scenario: ScenarioDocument,
        expected_version: Option<u64>,
    ) -> Result<(ScenarioRecord, bool), StoreError> {
        validate_name(name)?;
        scenario.to_scenario()?;
        let mut records = self.records.write().expect("store lock poisoned");
        let now = Utc::now();
        let current = records.get(name);
        let record = match (current, expected_version) {
            (None, None | Some(0)) => {
                ScenarioRecord { name: name.to_string(), version: 1, created_at: now, updated_at: now, scenario }
            }
            (Some(cur), Some(v)) if v == cur.version => ScenarioRecord {
                name: name.to_string(),
                version: cur.version + 1,
                created_at: cur.created_at,
                updated_at: now,
                scenario,
            },
            (cur, expected) => {
                return Err(StoreError::VersionConflict {
                    name: name.to_string(),
                    expected,
                    current: cur.map(|c| c.version),
                })
            }
        };
        let created = current.is_none();
        let json = serde_json::to_vec_pretty(&record).expect("records always serialize");
        self.write_atomic(&self.record_path(name), &json)?;
        records.insert(name.to_string(), record.clone());
        self.write_index(&records)?;
        Ok((record, created))
    }

    pub fn delete(&self, name: &str) -> Result<(), StoreError> {
        validate_name(name)?;
        let mut records = self.records.write().expect("store lock poisoned");
        if records.remove(name).is_none() {
            return Err(StoreError::NotFound(name.to_string()));
        }
        fs::remove_file(self.record_path(name))?;
        self.write_index(&records)
    }

    fn record_path(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{name}.json"))
    }

    fn write_index(&self, records: &BTreeMap<String, ScenarioRecord>) -> Result<(), StoreError> {
        let index: Vec<RecordSummary> = records.values().map(RecordSummary::from).collect();
        let json = serde_json::to_vec_pretty(&index).expect("index always serializes");
        self.write_atomic(&self.dir.join(INDEX_FILE), &json)
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
        let n = self.tmp_counter.fetch_add(1, Ordering::Relaxed);
        let file_name = path.file_name().and_then(|f| f.to_str()).unwrap_or("record");
        let tmp = self.dir.join(format!(".{file_name}.{}.{n}.tmp", std::process::id()));
        let result = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.write_all(b"\n")?;
            f.sync_all()?;
            fs::rename(&tmp, path)
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        Ok(result?)
    }
}

fn corrupt(path: &Path, message: impl Into<String>) -> StoreError {
    StoreError::Corrupt { path: path.to_path_buf(), message: message.into() }
}

fn load_record(path: &Path) -> Result<ScenarioRecord, StoreError> {
    let text = fs::read_to_string(path)?;
    let record: ScenarioRecord = serde_json::from_str(&text).map_err(|e| corrupt(path, e.to_string()))?;
    validate_name(&record.name).map_err(|e| corrupt(path, e.to_string()))?;
    record.scenario.to_scenario().map_err(|e| corrupt(path, e.to_string()))?;
    if record.version == 0 {
        return Err(corrupt(path, "version must be at least 1"));
    }
    Ok(record)
}
