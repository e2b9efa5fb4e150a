//! Uniform training and prediction over the five model kinds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classical::{knn_predict, lda_fit, lr_predict, lr_train, KnnModel, LdaModel, LogisticConfig, LogisticModel};
use crate::data::{stratified_split, BiomarkerVector, Dataset, OcdClass};
use crate::error::{Error, Result};
use crate::honn::{grid_search_with, HyperGrid, SearchOptions, SearchResult};
use crate::neural::{nn_predict, train, ActivationKind, NetworkModel, TrainConfig, WeightSet};

/// A class decision plus one score per class (HI, GAI, OAI).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: OcdClass,
    pub scores: [f64; 3],
}

pub trait Classifier: Send + Sync {
    /// `x` must already be normalized the way the training data was.
    fn predict(&self, x: &BiomarkerVector) -> Result<Prediction>;
}

/// A training procedure usable by the cross-validation harness. `test` is
/// the held-out fold; only trainers that select hyperparameters on it
/// (the grid search) look at it.
pub trait Trainer: Sync {
    fn fit(&self, train: &Dataset, test: &Dataset, seed: u64) -> Result<Box<dyn Classifier>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "LR")]
    Lr,
    #[serde(rename = "LDA")]
    Lda,
    #[serde(rename = "KNN")]
    Knn,
    #[serde(rename = "ANN")]
    Ann,
    #[serde(rename = "HONN")]
    Honn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [ModelKind::Ann, ModelKind::Knn, ModelKind::Lr, ModelKind::Lda, ModelKind::Honn];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lr => "LR",
            ModelKind::Lda => "LDA",
            ModelKind::Knn => "KNN",
            ModelKind::Ann => "ANN",
            ModelKind::Honn => "HONN",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown model kind {s:?}")))
    }
}

/// Fitted parameters of any supported model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TrainedModel {
    Logistic(LogisticModel),
    Lda(LdaModel),
    Knn(KnnModel),
    Network { model: NetworkModel, weights: WeightSet },
}

impl TrainedModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            TrainedModel::Logistic(m) => m.validate(),
            TrainedModel::Lda(m) => m.validate(),
            TrainedModel::Knn(m) => m.validate(),
            TrainedModel::Network { model, weights } => {
                model.require_ocd_shape()?;
                weights.validate(model)
            }
        }
    }

    /// Layer sizes for networks, `None` otherwise.
    pub fn network(&self) -> Option<&NetworkModel> {
        match self {
            TrainedModel::Network { model, .. } => Some(model),
            _ => None,
        }
    }
}

impl Classifier for TrainedModel {
    fn predict(&self, x: &BiomarkerVector) -> Result<Prediction> {
        x.validate()?;
        let (class, scores) = match self {
            TrainedModel::Logistic(m) => lr_predict(m, x)?,
            TrainedModel::Lda(m) => {
                let posteriors = m.posteriors(&x.to_array());
                let scores: [f64; 3] = posteriors.try_into().map_err(|_| Error::InvalidInput("LDA model must have three classes".into()))?;
                (crate::classical::lda_predict(m, x), scores)
            }
            TrainedModel::Knn(m) => {
                let votes = m.votes(x);
                let scores = votes.map(|v| v as f64 / m.k as f64);
                (knn_predict(m, x), scores)
            }
            TrainedModel::Network { model, weights } => nn_predict(model, weights, x)?,
        };
        Ok(Prediction { class, scores })
    }
}

/// How the grid search picks its winner inside a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Selection {
    /// Score candidates on the test data handed to the trainer.
    HeldOut,
    /// Carve a stratified validation split off the training data instead.
    Validation { fraction: f64 },
}

/// A model kind together with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Logistic(LogisticConfig),
    Lda,
    Knn { k: usize },
    Ann { hidden: Vec<usize>, activation: ActivationKind, rho: f64, epochs: usize, init_std: f64 },
    Honn { grid: HyperGrid, selection: Selection, options: SearchOptions },
}

impl ClassifierSpec {
    /// Defaults per kind: KNN k = 5; ANN (5, 6, 3), Logistic, ρ = 0.005,
    /// 10000 epochs; HONN over the full default grid.
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Lr => ClassifierSpec::Logistic(LogisticConfig::default()),
            ModelKind::Lda => ClassifierSpec::Lda,
            ModelKind::Knn => ClassifierSpec::Knn { k: 5 },
            ModelKind::Ann => ClassifierSpec::Ann {
                hidden: vec![6],
                activation: ActivationKind::Logistic,
                rho: 0.005,
                epochs: 10_000,
                init_std: 0.1,
            },
            ModelKind::Honn => ClassifierSpec::Honn {
                grid: HyperGrid::default(),
                selection: Selection::HeldOut,
                options: SearchOptions::default(),
            },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ClassifierSpec::Logistic(_) => ModelKind::Lr,
            ClassifierSpec::Lda => ModelKind::Lda,
            ClassifierSpec::Knn { .. } => ModelKind::Knn,
            ClassifierSpec::Ann { .. } => ModelKind::Ann,
            ClassifierSpec::Honn { .. } => ModelKind::Honn,
        }
    }

    /// Trains on normalized data. `test` is only consulted by HONN under
    /// [`Selection::HeldOut`].
    pub fn fit_model(&self, train_set: &Dataset, test: &Dataset, seed: u64) -> Result<FittedModel> {
        let model = match self {
            ClassifierSpec::Logistic(cfg) => TrainedModel::Logistic(lr_train(train_set, cfg, seed)?),
            ClassifierSpec::Lda => TrainedModel::Lda(lda_fit(train_set)?),
            ClassifierSpec::Knn { k } => TrainedModel::Knn(KnnModel::new(train_set, *k)?),
            ClassifierSpec::Ann { hidden, activation, rho, epochs, init_std } => {
                let model = NetworkModel::ocd(hidden, *activation)?;
                let cfg = TrainConfig { rho: *rho, epochs: *epochs, seed, init_std: *init_std };
                let outcome = train(&model, train_set, &cfg)?;
                TrainedModel::Network { model, weights: outcome.weights }
            }
            ClassifierSpec::Honn { grid, selection, options } => {
                let (tp, td) = match selection {
                    Selection::HeldOut => (train_set.clone(), test.clone()),
                    Selection::Validation { fraction } => stratified_split(train_set, *fraction, seed)?,
                };
                let search = grid_search_with(&tp, &td, grid, seed, options)?;
                if search.all_failed() {
                    return Err(Error::SearchFailed);
                }
                let model = TrainedModel::Network {
                    model: search.best_model.clone(),
                    weights: search.best_weights.clone(),
                };
                return Ok(FittedModel { model, search: Some(search) });
            }
        };
        Ok(FittedModel { model, search: None })
    }
}

impl Trainer for ClassifierSpec {
    fn fit(&self, train_set: &Dataset, test: &Dataset, seed: u64) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(self.fit_model(train_set, test, seed)?.model))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub model: TrainedModel,
    pub search: Option<SearchResult>,
}
