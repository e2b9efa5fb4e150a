//! Ingest, retrain and predict on top of a sample store and a registry.

use std::path::Path;
use std::sync::{Arc, Mutex};

use accu_core::honn::{HyperGrid, SearchOptions};
use accu_core::model::{Classifier, ClassifierSpec, Selection};
use accu_core::{BiomarkerVector, LabeledSample, OcdClass};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{ServiceError, ServiceResult};
use crate::record::{Hyperparameters, ModelRecord};
use crate::registry::Registry;
use crate::store::SampleStore;
use crate::training::{build_record, BuildSettings, DEFAULT_TEST_FRACTION};
use accu_core::evaluation::MetricsReport;
use accu_core::model::ModelKind;

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Always reports the same instant; makes records reproducible.
pub struct FixedClock(pub DateTime<Utc>);

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Retrain once this many samples arrived since the last run.
    pub threshold: usize,
    pub spec: ClassifierSpec,
    pub seed: u64,
    pub test_fraction: f64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self::with_grid(HyperGrid::default())
    }
}

impl ServiceConfig {
    /// Grid-searched networks with the given grid, threshold 30, seed 0.
    pub fn with_grid(grid: HyperGrid) -> Self {
        Self {
            threshold: 30,
            spec: ClassifierSpec::Honn {
                grid,
                selection: Selection::HeldOut,
                options: SearchOptions::default(),
            },
            seed: 0,
            test_fraction: DEFAULT_TEST_FRACTION,
        }
    }

    pub fn validate(&self) -> ServiceResult<()> {
        if self.threshold == 0 {
            return Err(ServiceError::Config("retrain threshold must be at least 1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(ServiceError::Config("test fraction must lie in (0, 1)".into()));
        }
        if let ClassifierSpec::Honn { grid, .. } = &self.spec {
            grid.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictOutcome {
    pub class: OcdClass,
    pub scores: [f64; 3],
    pub model_version: u64,
}

/// What the service exposes about its active model. Carries no samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub version: u64,
    pub created_at: String,
    pub kind: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hyperparameters: Option<Hyperparameters>,
    pub dataset_size: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_hash: Option<String>,
    pub holdout_metrics: MetricsReport,
}

impl ModelInfo {
    pub fn from_record(r: &ModelRecord) -> Self {
        Self {
            version: r.version,
            created_at: r.created_at.clone(),
            kind: r.kind,
            topology: r.model.network().map(|m| m.topology_string()),
            hyperparameters: r.metadata.hyperparameters.clone(),
            dataset_size: r.metadata.dataset_size,
            train_size: r.metadata.train_size,
            test_size: r.metadata.test_size,
            seed: r.metadata.seed,
            grid_hash: r.metadata.grid_hash.clone(),
            holdout_metrics: r.metadata.holdout_metrics.clone(),
        }
    }
}

pub struct AccuService {
    config: ServiceConfig,
    store: SampleStore,
    registry: Registry,
    clock: Arc<dyn Clock>,
    /// Held for the whole of a retraining run: one writer at a time.
    training: Mutex<()>,
}

pub const SAMPLE_LOG: &str = "samples.log";
pub const MODEL_DIR: &str = "models";

impl AccuService {
    pub fn new(config: ServiceConfig, store: SampleStore, registry: Registry, clock: Arc<dyn Clock>) -> ServiceResult<Self> {
        config.validate()?;
        if let Some(r) = registry.active() {
            store.mark_trained(r.metadata.dataset_size);
        }
        Ok(Self { config, store, registry, clock, training: Mutex::new(()) })
    }

    /// Everything in memory; nothing touches the disk.
    pub fn in_memory(config: ServiceConfig, clock: Arc<dyn Clock>) -> ServiceResult<Self> {
        Self::new(config, SampleStore::in_memory(), Registry::in_memory(), clock)
    }

    /// Sample log at `dir/samples.log`, records under `dir/models/`.
    pub fn open(dir: &Path, config: ServiceConfig, clock: Arc<dyn Clock>) -> ServiceResult<Self> {
        let store = SampleStore::open(&dir.join(SAMPLE_LOG))?;
        let registry = Registry::open(&dir.join(MODEL_DIR))?;
        Self::new(config, store, registry, clock)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn store(&self) -> &SampleStore {
        &self.store
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn ingest(&self, sample: LabeledSample) -> ServiceResult<u64> {
        self.store.append(sample)
    }

    pub fn retrain_due(&self) -> bool {
        self.store.since_last_train() >= self.config.threshold
    }

    /// Retrains when the threshold is met; `Ok(None)` otherwise.
    pub fn maybe_retrain(&self) -> ServiceResult<Option<Arc<ModelRecord>>> {
        self.retrain(false)
    }

    /// Retrains regardless of the threshold.
    pub fn retrain_now(&self) -> ServiceResult<Arc<ModelRecord>> {
        self.retrain(true).map(|r| r.expect("forced retrain publishes or fails"))
    }

    fn retrain(&self, force: bool) -> ServiceResult<Option<Arc<ModelRecord>>> {
        let _writer = self.training.lock().unwrap_or_else(|p| p.into_inner());
        if !force && !self.retrain_due() {
            return Ok(None);
        }
        let snapshot = self.store.snapshot();
        let version = self.registry.latest_version() + 1;
        let settings = BuildSettings {
            spec: self.config.spec.clone(),
            seed: self.config.seed,
            test_fraction: self.config.test_fraction,
            version,
            created_at: self.clock.now().to_rfc3339_opts(SecondsFormat::Millis, true),
        };
        log::info!("retraining version {version} on {} samples", snapshot.len());
        let built = match build_record(&snapshot, &settings) {
            Ok(b) => b,
            Err(e) => {
                log::warn!("retraining version {version} failed: {e}");
                return Err(e);
            }
        };
        let log = built.search.as_ref().map(|s| s.log.as_slice());
        let record = self.registry.publish(built.record, log)?;
        self.store.mark_trained(snapshot.len());
        log::info!("published model version {version}");
        Ok(Some(record))
    }

    pub fn predict(&self, x: &BiomarkerVector) -> ServiceResult<PredictOutcome> {
        x.validate()?;
        let record = self.registry.active().ok_or(ServiceError::NotReady)?;
        predict_with_record(&record, x)
    }

    pub fn model_info(&self) -> ServiceResult<ModelInfo> {
        let record = self.registry.active().ok_or(ServiceError::NotReady)?;
        Ok(ModelInfo::from_record(&record))
    }
}

/// Normalizes with the record's parameters and classifies.
pub fn predict_with_record(record: &ModelRecord, x: &BiomarkerVector) -> ServiceResult<PredictOutcome> {
    let z = record.normalization.apply(x)?;
    let p = record.model.predict(&z)?;
    Ok(PredictOutcome { class: p.class, scores: p.scores, model_version: record.version })
}
