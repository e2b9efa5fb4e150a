use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_confusion, compute_metrics, ConfusionMatrix, MetricsReport};
use crate::data::{make_folds, normalize_fit, Dataset, OcdClass};
use crate::error::{Error, Result};
use crate::model::Trainer;
use crate::rng::derive_seed;

/// Offset separating trainer seed streams from fold-plan seed streams.
const TRAINER_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub repeat: usize,
    pub fold: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
}

/// Mean of each metric over all rounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub overall_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MeanMetrics {
    pub fn as_pairs(&self) -> [(&'static str, f64); 4] {
        [
            ("overall_accuracy", self.overall_accuracy),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
        ]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "metric,value")?;
        for (name, v) in self.as_pairs() {
            writeln!(w, "{name},{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationReport {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub mean: MeanMetrics,
    pub rounds: Vec<RoundReport>,
}

impl CrossValidationReport {
    /// Confusion counts summed over every round.
    pub fn pooled_confusion(&self) -> ConfusionMatrix {
        let mut total = ConfusionMatrix::default();
        for r in &self.rounds {
            total += r.confusion;
        }
        total
    }

    pub fn write_rounds_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "round,repeat,fold,overall_accuracy,precision,recall,f1")?;
        for r in &self.rounds {
            let m = &r.metrics;
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.round, r.repeat, r.fold, m.overall_accuracy, m.precision, m.recall, m.f1
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for CrossValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}-fold x {} repeats ({} rounds), mean over rounds:",
            self.k,
            self.repeats,
            self.rounds.len()
        )?;
        for (name, v) in self.mean.as_pairs() {
            writeln!(f, "  {name:<18} {v:.6}")?;
        }
        Ok(())
    }
}

/// Repeated k-fold cross-validation.
///
/// Each repeat reshuffles with its own seed and rotates through the `k`
/// folds. Every round fits min-max normalization (target `[0, 1]`) on its
/// training folds only, applies it to both sides, trains, and scores the
/// held-out fold. Rounds are independent and run in parallel; the report
/// lists them in round order.
pub fn cross_validate(
    trainer: &dyn Trainer,
    data: &Dataset,
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<CrossValidationReport> {
    if k < 2 || repeats == 0 {
        return Err(Error::InvalidInput("cross-validation needs k >= 2 and repeats >= 1".into()));
    }
    let counts = data.class_counts();
    for class in OcdClass::ALL {
        if counts[class.index()] < k {
            return Err(Error::TooFewSamples {
                class,
                count: counts[class.index()],
                required: k,
            });
        }
    }

    let plans = (0..repeats)
        .map(|r| make_folds(data.len(), k, derive_seed(seed, r as u64)))
        .collect::<Result<Vec<_>>>()?;

    let rounds = (0..repeats * k)
        .into_par_iter()
        .map(|round| {
            let (repeat, fold) = (round / k, round % k);
            let plan = &plans[repeat];
            let train_raw = data.subset(&plan.training_indices(fold));
            let test_raw = data.subset(&plan.folds[fold]);
            let fail = |message: String| Error::Round { round, message };
            train_raw.require_all_classes().map_err(|e| fail(e.to_string()))?;

            let norm = normalize_fit(&train_raw, 0.0, 1.0).map_err(|e| fail(e.to_string()))?;
            let train = norm.apply_dataset(&train_raw)?;
            let test = norm.apply_dataset(&test_raw)?;
            let classifier = trainer
                .fit(&train, &test, derive_seed(seed, TRAINER_STREAM + round as u64))
                .map_err(|e| fail(e.to_string()))?;
            let preds = test
                .iter()
                .map(|s| classifier.predict(&s.features).map(|p| p.class))
                .collect::<Result<Vec<_>>>()?;
            let confusion = build_confusion(&preds, &test.labels())?;
            Ok(RoundReport {
                round,
                repeat,
                fold,
                metrics: compute_metrics(&confusion)?,
                confusion,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = rounds.len() as f64;
    let mut mean = MeanMetrics::default();
    for r in &rounds {
        mean.overall_accuracy += r.metrics.overall_accuracy / n;
        mean.precision += r.metrics.precision / n;
        mean.recall += r.metrics.recall / n;
        mean.f1 += r.metrics.f1 / n;
    }
    Ok(CrossValidationReport {
        k,
        repeats,
        seed,
        mean,
        rounds,
    })
}
