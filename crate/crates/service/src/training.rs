//! Builds a [`ModelRecord`] from a dataset snapshot.

use accu_core::data::{normalize_fit, stratified_split};
use accu_core::evaluation::{build_confusion, compute_metrics};
use accu_core::honn::SearchResult;
use accu_core::model::{Classifier, ClassifierSpec};
use accu_core::rng::derive_seed;
use accu_core::{Dataset, Error};

use crate::error::{ServiceError, ServiceResult};
use crate::record::{grid_hash, Hyperparameters, ModelRecord, TrainingMetadata, FORMAT_VERSION};

/// Default held-out share of a snapshot: a 2:1 train/test split.
pub const DEFAULT_TEST_FRACTION: f64 = 1.0 / 3.0;

/// Everything a record needs besides the data.
#[derive(Debug, Clone)]
pub struct BuildSettings {
    pub spec: ClassifierSpec,
    pub seed: u64,
    pub test_fraction: f64,
    pub version: u64,
    pub created_at: String,
}

pub struct BuiltRecord {
    pub record: ModelRecord,
    pub search: Option<SearchResult>,
}

/// Splits the snapshot by class, fits min-max normalization on the
/// training part, trains, and scores the result on the held-out part.
/// Grid searches select on the held-out part.
pub fn build_record(data: &Dataset, settings: &BuildSettings) -> ServiceResult<BuiltRecord> {
    data.require_all_classes().map_err(|e| ServiceError::InsufficientData(e.to_string()))?;
    let (train_raw, test_raw) = stratified_split(data, settings.test_fraction, derive_seed(settings.seed, 0))
        .map_err(|e| ServiceError::InsufficientData(e.to_string()))?;
    if test_raw.is_empty() {
        return Err(ServiceError::InsufficientData("held-out split is empty".into()));
    }
    train_raw.require_all_classes().map_err(|e| ServiceError::InsufficientData(e.to_string()))?;

    let normalization = normalize_fit(&train_raw, 0.0, 1.0)?;
    let train = normalization.apply_dataset(&train_raw)?;
    let test = normalization.apply_dataset(&test_raw)?;
    let fitted = match settings.spec.fit_model(&train, &test, derive_seed(settings.seed, 1)) {
        Err(Error::SearchFailed) => return Err(ServiceError::AllCandidatesFailed),
        Err(e @ (Error::TooFewSamples { .. } | Error::ZeroVariance { .. } | Error::MissingClass(_))) => {
            return Err(ServiceError::InsufficientData(e.to_string()))
        }
        other => other?,
    };

    let preds = test
        .iter()
        .map(|s| fitted.model.predict(&s.features).map(|p| p.class))
        .collect::<accu_core::Result<Vec<_>>>()?;
    let holdout_metrics = compute_metrics(&build_confusion(&preds, &test.labels())?)?;

    let (grid_hash, hyperparameters) = match (&settings.spec, &fitted.search) {
        (ClassifierSpec::Honn { grid, .. }, Some(search)) => (
            Some(grid_hash(grid)),
            search.best_rho.zip(search.best_epochs).map(|(rho, epochs)| Hyperparameters {
                activation: search.best_model.activation,
                rho,
                epochs,
                topology: search.best_model.topology_string(),
            }),
        ),
        _ => (None, None),
    };

    let record = ModelRecord {
        format_version: FORMAT_VERSION,
        version: settings.version,
        created_at: settings.created_at.clone(),
        kind: settings.spec.kind(),
        model: fitted.model,
        normalization,
        metadata: TrainingMetadata {
            dataset_size: data.len(),
            train_size: train.len(),
            test_size: test.len(),
            seed: settings.seed,
            grid_hash,
            search_log: None,
            hyperparameters,
            holdout_metrics,
        },
    };
    Ok(BuiltRecord { record, search: fitted.search })
}
