//! Versioned model records and the currently active one.
//!
//! Records live in `model-NNNNNN.json` files, search logs next to them in
//! `search-NNNNNN.csv`. The active record is swapped behind an `Arc`, so a
//! reader holds one complete version for as long as it needs it.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use accu_core::honn::{write_search_log_csv, SearchLogEntry};

use crate::error::{ServiceError, ServiceResult};
use crate::record::{write_atomically, ModelRecord};

pub struct Registry {
    dir: Option<PathBuf>,
    active: RwLock<Option<Arc<ModelRecord>>>,
}

pub fn record_file_name(version: u64) -> String {
    format!("model-{version:06}.json")
}

pub fn search_log_file_name(version: u64) -> String {
    format!("search-{version:06}.csv")
}

impl Registry {
    pub fn in_memory() -> Self {
        Self { dir: None, active: RwLock::new(None) }
    }

    /// Opens `dir`, creating it if needed, and activates the newest record.
    pub fn open(dir: &Path) -> ServiceResult<Self> {
        fs::create_dir_all(dir)?;
        let mut newest: Option<(u64, PathBuf)> = None;
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            let Some(version) = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_prefix("model-"))
                .and_then(|n| n.strip_suffix(".json"))
                .and_then(|n| n.parse::<u64>().ok())
            else {
                continue;
            };
            if newest.as_ref().is_none_or(|(v, _)| version > *v) {
                newest = Some((version, path));
            }
        }
        let active = match newest {
            Some((version, path)) => {
                let record = ModelRecord::load(&path)?;
                if record.version != version {
                    return Err(ServiceError::Record(format!(
                        "{} holds version {}",
                        path.display(),
                        record.version
                    )));
                }
                Some(Arc::new(record))
            }
            None => None,
        };
        Ok(Self { dir: Some(dir.to_path_buf()), active: RwLock::new(active) })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn active(&self) -> Option<Arc<ModelRecord>> {
        self.active.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    /// Version of the active record, 0 when there is none.
    pub fn latest_version(&self) -> u64 {
        self.active().map_or(0, |r| r.version)
    }

    pub fn record_path(&self, version: u64) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(record_file_name(version)))
    }

    /// Persists the record (and its search log, if any) and makes it the
    /// active one. The version must exceed the active version.
    pub fn publish(&self, mut record: ModelRecord, search_log: Option<&[SearchLogEntry]>) -> ServiceResult<Arc<ModelRecord>> {
        record.validate()?;
        let current = self.latest_version();
        if record.version <= current {
            return Err(ServiceError::Record(format!(
                "version {} does not follow active version {current}",
                record.version
            )));
        }
        if let Some(dir) = &self.dir {
            if let Some(log) = search_log {
                let name = search_log_file_name(record.version);
                let mut buf = Vec::new();
                write_search_log_csv(log, &mut buf)?;
                write_atomically(&dir.join(&name), &buf)?;
                record.metadata.search_log = Some(name);
            }
            record.save(&dir.join(record_file_name(record.version)))?;
        }
        let record = Arc::new(record);
        *self.active.write().unwrap_or_else(|p| p.into_inner()) = Some(Arc::clone(&record));
        Ok(record)
    }
}
