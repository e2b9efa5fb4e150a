use serde::{Deserialize, Serialize};

use super::{BiomarkerVector, Dataset, LabeledSample, FEATURE_COUNT};
use crate::error::{Error, Result};

/// Per-feature min-max statistics and the target range `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub mins: [f64; FEATURE_COUNT],
    pub maxs: [f64; FEATURE_COUNT],
    pub lower: f64,
    pub upper: f64,
}

impl NormalizationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lower < self.upper) || !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(Error::InvalidInput(format!(
                "target range [{}, {}] must satisfy lower < upper",
                self.lower, self.upper
            )));
        }
        for i in 0..FEATURE_COUNT {
            if !(self.mins[i] <= self.maxs[i]) {
                return Err(Error::InvalidInput(format!("feature {i}: min exceeds max")));
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: &BiomarkerVector) -> Result<BiomarkerVector> {
        normalize_apply(self, x)
    }

    /// Normalizes every sample, keeping labels and provenance.
    pub fn apply_dataset(&self, dataset: &Dataset) -> Result<Dataset> {
        dataset
            .iter()
            .map(|s| {
                Ok(LabeledSample {
                    features: self.apply(&s.features)?,
                    label: s.label,
                    provenance: s.provenance.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Dataset::new)
    }
}

/// Records each feature's observed extremes over `dataset`.
pub fn normalize_fit(dataset: &Dataset, lower: f64, upper: f64) -> Result<NormalizationParams> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut mins = [f64::INFINITY; FEATURE_COUNT];
    let mut maxs = [f64::NEG_INFINITY; FEATURE_COUNT];
    for s in dataset {
        for (i, v) in s.features.to_array().into_iter().enumerate() {
            mins[i] = mins[i].min(v);
            maxs[i] = maxs[i].max(v);
        }
    }
    let params = NormalizationParams { mins, maxs, lower, upper };
    params.validate()?;
    Ok(params)
}

/// `lower + (upper - lower) * (x - min) / (max - min)` per feature; a
/// constant feature maps to the middle of the target range.
pub fn normalize_apply(params: &NormalizationParams, x: &BiomarkerVector) -> Result<BiomarkerVector> {
    x.validate()?;
    let span = params.upper - params.lower;
    let mut out = [0.0; FEATURE_COUNT];
    for (i, v) in x.to_array().into_iter().enumerate() {
        let (lo, hi) = (params.mins[i], params.maxs[i]);
        out[i] = if hi > lo {
            params.lower + span * ((v - lo) / (hi - lo))
        } else {
            0.5 * (params.lower + params.upper)
        };
    }
    BiomarkerVector::from_array(out)
}
