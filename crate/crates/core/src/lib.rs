//! Detection of the OCD class (HI / GAI / OAI) from five oxidative-stress
//! biomarkers.
//!
//! The crate bundles the data model and CSV format ([`data`]), three
//! baseline classifiers ([`classical`]), a from-scratch backpropagation
//! network ([`neural`]), the hyperparameter grid search built on top of it
//! ([`honn`]), the confusion-matrix metrics and repeated k-fold harness
//! ([`evaluation`]) and a seeded synthetic dataset generator ([`synthgen`]).

pub mod classical;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod honn;
pub mod model;
pub mod neural;
pub mod rng;
pub mod synthgen;

pub use data::{BiomarkerVector, Dataset, FoldPlan, LabeledSample, NormalizationParams, OcdClass, Provenance};
pub use error::{Error, Result};
