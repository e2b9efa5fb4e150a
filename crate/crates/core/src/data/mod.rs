//! Domain types shared by every classifier, plus the dataset CSV format,
//! min-max normalization and fold planning.

mod csv;
mod folds;
mod normalize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::csv::{parse_dataset_csv, read_dataset_csv, write_dataset_csv, CSV_HEADER};
pub use self::folds::{make_folds, stratified_split, FoldPlan};
pub use self::normalize::{normalize_apply, normalize_fit, NormalizationParams};

/// Number of biomarkers per individual.
pub const FEATURE_COUNT: usize = 5;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = ["SD", "GP", "CAT", "MAL", "SC"];

/// The three diagnostic classes, ordered by their canonical codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OcdClass {
    /// Healthy individual.
    #[serde(rename = "HI")]
    Hi,
    /// Genetically affected individual (first-degree relative of a patient).
    #[serde(rename = "GAI")]
    Gai,
    /// OCD-affected individual.
    #[serde(rename = "OAI")]
    Oai,
}

impl OcdClass {
    pub const COUNT: usize = 3;
    pub const ALL: [OcdClass; 3] = [OcdClass::Hi, OcdClass::Gai, OcdClass::Oai];

    /// Canonical integer code: HI = 1, GAI = 2, OAI = 3.
    pub fn code(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(OcdClass::Hi),
            2 => Some(OcdClass::Gai),
            3 => Some(OcdClass::Oai),
            _ => None,
        }
    }

    /// Zero-based position, used for array indexing.
    pub fn index(self) -> usize {
        match self {
            OcdClass::Hi => 0,
            OcdClass::Gai => 1,
            OcdClass::Oai => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OcdClass::Hi => "HI",
            OcdClass::Gai => "GAI",
            OcdClass::Oai => "OAI",
        }
    }

    /// Index of the largest score; ties go to the lowest class code.
    pub fn argmax(scores: &[f64; 3]) -> OcdClass {
        let mut best = 0;
        for i in 1..3 {
            if scores[i] > scores[best] {
                best = i;
            }
        }
        Self::ALL[best]
    }
}

impl fmt::Display for OcdClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OcdClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HI" => Ok(OcdClass::Hi),
            "GAI" => Ok(OcdClass::Gai),
            "OAI" => Ok(OcdClass::Oai),
            _ => Err(Error::InvalidInput(format!("unknown class label {s:?}"))),
        }
    }
}

/// The five oxidative-stress biomarkers of one individual, in assay-native
/// units. All values are finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiomarkerVector {
    pub sd: f64,
    pub gp: f64,
    pub cat: f64,
    pub mal: f64,
    pub sc: f64,
}

impl BiomarkerVector {
    pub fn new(sd: f64, gp: f64, cat: f64, mal: f64, sc: f64) -> Result<Self> {
        Self::from_array([sd, gp, cat, mal, sc])
    }

    pub fn from_array(values: [f64; FEATURE_COUNT]) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "biomarker {} is not finite ({})",
                FEATURE_NAMES[i], values[i]
            )));
        }
        let [sd, gp, cat, mal, sc] = values;
        Ok(Self { sd, gp, cat, mal, sc })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let array: [f64; FEATURE_COUNT] = values.try_into().map_err(|_| Error::Shape {
            expected: format!("{FEATURE_COUNT} features"),
            found: format!("{} features", values.len()),
        })?;
        Self::from_array(array)
    }

    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [self.sd, self.gp, self.cat, self.mal, self.sc]
    }

    /// Re-checks the finiteness invariant; fields are public so values
    /// built by struct literal or deserialization may violate it.
    pub fn validate(&self) -> Result<()> {
        Self::from_array(self.to_array()).map(|_| ())
    }
}

/// Where a sample came from. Present fields are never empty strings.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hospital_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lab_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl Provenance {
    pub fn is_empty(&self) -> bool {
        self.hospital_id.is_none() && self.lab_id.is_none() && self.timestamp.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("hospital_id", &self.hospital_id),
            ("lab_id", &self.lab_id),
            ("timestamp", &self.timestamp),
        ] {
            if matches!(value, Some(v) if v.trim().is_empty()) {
                return Err(Error::InvalidInput(format!("{name} must not be empty")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: BiomarkerVector,
    pub label: OcdClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl LabeledSample {
    pub fn new(features: BiomarkerVector, label: OcdClass) -> Self {
        Self {
            features,
            label,
            provenance: None,
        }
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = (!provenance.is_empty()).then_some(provenance);
        self
    }
}

/// Ordered collection of labeled samples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<LabeledSample>,
}

impl Dataset {
    pub fn new(samples: Vec<LabeledSample>) -> Self {
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledSample> {
        self.samples.iter()
    }

    pub fn push(&mut self, sample: LabeledSample) {
        self.samples.push(sample);
    }

    pub fn into_samples(self) -> Vec<LabeledSample> {
        self.samples
    }

    pub fn labels(&self) -> Vec<OcdClass> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Samples per class, indexed by [`OcdClass::index`].
    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for s in &self.samples {
            counts[s.label.index()] += 1;
        }
        counts
    }

    /// Fails with [`Error::MissingClass`] naming the first absent class.
    pub fn require_all_classes(&self) -> Result<()> {
        let counts = self.class_counts();
        match OcdClass::ALL.iter().find(|c| counts[c.index()] == 0) {
            Some(&c) => Err(Error::MissingClass(c)),
            None => Ok(()),
        }
    }

    /// New dataset made of the samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset::new(indices.iter().map(|&i| self.samples[i].clone()).collect())
    }
}

impl FromIterator<LabeledSample> for Dataset {
    fn from_iter<I: IntoIterator<Item = LabeledSample>>(iter: I) -> Self {
        Dataset::new(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a LabeledSample;
    type IntoIter = std::slice::Iter<'a, LabeledSample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}
