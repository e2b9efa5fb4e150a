//! Append-only sample log.
//!
//! On disk the log is JSON Lines: one `{"sequence_id": n, "sample": {...}}`
//! object per line, `n` counting from 1. Appends are serialized by a mutex
//! and reach the file before they become visible in memory.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use accu_core::{Dataset, LabeledSample};
use serde::{Deserialize, Serialize};

use crate::error::{FieldError, ServiceError, ServiceResult};

#[derive(Serialize, Deserialize)]
struct LogLine {
    sequence_id: u64,
    sample: LabeledSample,
}

struct Inner {
    samples: Vec<LabeledSample>,
    sink: Option<Box<dyn Write + Send>>,
    /// Number of leading samples already covered by a training run.
    trained_upto: usize,
}

pub struct SampleStore {
    inner: Mutex<Inner>,
}

impl SampleStore {
    /// A store that keeps samples in memory only.
    pub fn in_memory() -> Self {
        Self::from_parts(Vec::new(), None)
    }

    /// A store whose log lines go to `sink`; used to inject write failures.
    pub fn with_sink(sink: Box<dyn Write + Send>) -> Self {
        Self::from_parts(Vec::new(), Some(sink))
    }

    /// Opens (or creates) the log at `path`, loading existing entries.
    pub fn open(path: &Path) -> ServiceResult<Self> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut samples = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: LogLine = serde_json::from_str(&line).map_err(|e| {
                    ServiceError::Record(format!("{} line {}: {e}", path.display(), i + 1))
                })?;
                if entry.sequence_id != samples.len() as u64 + 1 {
                    return Err(ServiceError::Record(format!(
                        "{} line {}: sequence id {} out of order",
                        path.display(),
                        i + 1,
                        entry.sequence_id
                    )));
                }
                samples.push(entry.sample);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self::from_parts(samples, Some(Box::new(file))))
    }

    fn from_parts(samples: Vec<LabeledSample>, sink: Option<Box<dyn Write + Send>>) -> Self {
        Self {
            inner: Mutex::new(Inner { samples, sink, trained_upto: 0 }),
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Validates and appends a sample, returning its sequence id.
    pub fn append(&self, sample: LabeledSample) -> ServiceResult<u64> {
        let mut errors = Vec::new();
        if let Err(e) = sample.features.validate() {
            errors.push(FieldError::new("features", e.to_string()));
        }
        if let Some(p) = &sample.provenance {
            if let Err(e) = p.validate() {
                errors.push(FieldError::new("provenance", e.to_string()));
            }
        }
        if !errors.is_empty() {
            return Err(ServiceError::Validation(errors));
        }

        let mut inner = self.lock();
        let sequence_id = inner.samples.len() as u64 + 1;
        if let Some(sink) = inner.sink.as_mut() {
            let mut line = serde_json::to_string(&LogLine { sequence_id, sample: sample.clone() })
                .map_err(|e| ServiceError::Record(e.to_string()))?;
            line.push('\n');
            sink.write_all(line.as_bytes())
                .and_then(|_| sink.flush())
                .map_err(ServiceError::StoreWrite)?;
        }
        inner.samples.push(sample);
        Ok(sequence_id)
    }

    pub fn len(&self) -> usize {
        self.lock().samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Samples appended since the last completed training run.
    pub fn since_last_train(&self) -> usize {
        let inner = self.lock();
        inner.samples.len() - inner.trained_upto
    }

    /// An immutable copy of the current contents.
    pub fn snapshot(&self) -> Dataset {
        Dataset::new(self.lock().samples.clone())
    }

    /// Records that the first `count` samples have been trained on.
    pub fn mark_trained(&self, count: usize) {
        let mut inner = self.lock();
        inner.trained_upto = inner.trained_upto.max(count.min(inner.samples.len()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use accu_core::{BiomarkerVector, OcdClass};
    use std::sync::Arc;

    fn sample(v: f64) -> LabeledSample {
        LabeledSample::new(BiomarkerVector::from_array([v; 5]).unwrap(), OcdClass::Gai)
    }

    #[test]
    fn ids_start_at_one_and_counter_tracks_training() {
        let s = SampleStore::in_memory();
        assert_eq!(s.append(sample(1.0)).unwrap(), 1);
        assert_eq!(s.append(sample(2.0)).unwrap(), 2);
        assert_eq!(s.since_last_train(), 2);
        s.mark_trained(2);
        assert_eq!(s.since_last_train(), 0);
        s.append(sample(3.0)).unwrap();
        assert_eq!(s.since_last_train(), 1);
    }

    #[test]
    fn concurrent_appends_get_distinct_consecutive_ids() {
        let s = Arc::new(SampleStore::in_memory());
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let s = Arc::clone(&s);
                std::thread::spawn(move || (0..25).map(|j| s.append(sample((i * 100 + j) as f64)).unwrap()).collect::<Vec<_>>())
            })
            .collect();
        let mut ids: Vec<u64> = handles.into_iter().flat_map(|h| h.join().unwrap()).collect();
        ids.sort_unstable();
        assert_eq!(ids, (1..=200).collect::<Vec<_>>());
    }

    struct Broken;

    impl Write for Broken {
        fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
            Err(std::io::Error::other("disk full"))
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn write_failure_is_retryable_and_stores_nothing() {
        let s = SampleStore::with_sink(Box::new(Broken));
        let err = s.append(sample(1.0)).unwrap_err();
        assert!(err.is_retryable());
        assert!(s.is_empty());
    }

    #[test]
    fn log_reloads_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.log");
        {
            let s = SampleStore::open(&path).unwrap();
            s.append(sample(0.1)).unwrap();
            s.append(sample(0.2)).unwrap();
        }
        let s = SampleStore::open(&path).unwrap();
        assert_eq!(s.snapshot().samples(), &[sample(0.1), sample(0.2)]);
        assert_eq!(s.append(sample(0.3)).unwrap(), 3);
    }
}
