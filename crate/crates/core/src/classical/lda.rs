//! Linear discriminant analysis with a shared diagonal covariance.

use serde::{Deserialize, Serialize};

use crate::data::{BiomarkerVector, Dataset, OcdClass};
use crate::error::{Error, Result};

/// Class priors, class means and the pooled per-feature variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
}

impl LdaModel {
    /// Fits on raw rows with zero-based class indices `0..n_classes`.
    ///
    /// Priors are `n_k / N`, means are per-class averages and the shared
    /// variance of each feature is `Σ_k Σ_{i in k} (x_i − μ_k)² / (N − M)`.
    pub fn fit_rows(rows: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Shape {
                expected: format!("{} labels", rows.len()),
                found: format!("{} labels", labels.len()),
            });
        }
        let n = rows.len();
        if n <= n_classes {
            return Err(Error::InvalidInput(format!(
                "LDA needs more samples ({n}) than classes ({n_classes})"
            )));
        }
        let dim = rows[0].len();
        let mut counts = vec![0usize; n_classes];
        let mut means = vec![vec![0.0; dim]; n_classes];
        for (row, &k) in rows.iter().zip(labels) {
            if k >= n_classes || row.len() != dim {
                return Err(Error::InvalidInput(format!("bad row for class index {k}")));
            }
            counts[k] += 1;
            for (m, v) in means[k].iter_mut().zip(row) {
                *m += v;
            }
        }
        if let Some(k) = counts.iter().position(|&c| c < 2) {
            return Err(Error::InvalidInput(format!(
                "class index {k} has {} samples, at least 2 required",
                counts[k]
            )));
        }
        for (mean, &c) in means.iter_mut().zip(&counts) {
            mean.iter_mut().for_each(|m| *m /= c as f64);
        }

        let mut variances = vec![0.0; dim];
        for (row, &k) in rows.iter().zip(labels) {
            for (f, v) in row.iter().enumerate() {
                let d = v - means[k][f];
                variances[f] += d * d;
            }
        }
        let dof = (n - n_classes) as f64;
        variances.iter_mut().for_each(|v| *v /= dof);
        if let Some(feature) = variances.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::ZeroVariance { feature });
        }

        let priors = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Ok(Self {
            priors,
            means,
            variances,
        })
    }

    pub fn class_count(&self) -> usize {
        self.priors.len()
    }

    /// `δ_k(x) = xᵀΣ⁻¹μ_k − ½ μ_kᵀΣ⁻¹μ_k + ln π_k` with diagonal `Σ`.
    pub fn discriminant(&self, x: &[f64], k: usize) -> f64 {
        let mean = &self.means[k];
        let mut linear = 0.0;
        let mut quadratic = 0.0;
        for ((xf, mf), var) in x.iter().zip(mean).zip(&self.variances) {
            linear += xf * mf / var;
            quadratic += mf * mf / var;
        }
        linear - 0.5 * quadratic + self.priors[k].ln()
    }

    /// Class index with the largest discriminant; lowest index on ties.
    pub fn predict_index(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_score = self.discriminant(x, 0);
        for k in 1..self.class_count() {
            let score = self.discriminant(x, k);
            if score > best_score {
                best = k;
                best_score = score;
            }
        }
        best
    }

    /// Posterior class probabilities, `softmax(δ)`.
    pub fn posteriors(&self, x: &[f64]) -> Vec<f64> {
        let scores: Vec<f64> = (0..self.class_count()).map(|k| self.discriminant(x, k)).collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / total).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.priors.iter().sum();
        let ok = self.priors.len() == self.means.len()
            && self.priors.iter().all(|&p| p > 0.0)
            && (sum - 1.0).abs() <= 1e-12
            && self.variances.iter().all(|&v| v > 0.0 && v.is_finite())
            && self.means.iter().all(|m| m.len() == self.variances.len());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("malformed LDA model".into()))
        }
    }
}

pub fn lda_fit(data: &Dataset) -> Result<LdaModel> {
    let counts = data.class_counts();
    for class in OcdClass::ALL {
        let count = counts[class.index()];
        if count < 2 {
            return Err(Error::TooFewSamples {
                class,
                count,
                required: 2,
            });
        }
    }
    let rows: Vec<Vec<f64>> = data.iter().map(|s| s.features.to_array().to_vec()).collect();
    let labels: Vec<usize> = data.iter().map(|s| s.label.index()).collect();
    LdaModel::fit_rows(&rows, &labels, OcdClass::COUNT)
}

pub fn lda_discriminant(model: &LdaModel, x: &BiomarkerVector, class: OcdClass) -> f64 {
    model.discriminant(&x.to_array(), class.index())
}

pub fn lda_predict(model: &LdaModel, x: &BiomarkerVector) -> OcdClass {
    OcdClass::ALL[model.predict_index(&x.to_array())]
}
