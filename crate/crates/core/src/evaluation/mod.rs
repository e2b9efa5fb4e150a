//! Confusion matrices, the four summary metrics and repeated k-fold
//! cross-validation.

mod cv;

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::OcdClass;
use crate::error::{Error, Result};

pub use cv::{cross_validate, CrossValidationReport, MeanMetrics, RoundReport};

const C: usize = OcdClass::COUNT;

/// `counts[p][a]` is the number of samples predicted as class `p` whose
/// actual class is `a` (both zero-based class indices).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; C]; C],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; C]; C]) -> Self {
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn record(&mut self, predicted: OcdClass, actual: OcdClass) {
        self.counts[predicted.index()][actual.index()] += 1;
    }

    pub fn is_diagonal(&self) -> bool {
        (0..C).all(|i| (0..C).all(|j| i == j || self.counts[i][j] == 0))
    }

    /// True/false positive/negative counts of `class`.
    pub fn outcome(&self, class: OcdClass) -> ClassOutcome {
        let c = class.index();
        let tp = self.counts[c][c];
        let fp: u64 = (0..C).filter(|&j| j != c).map(|j| self.counts[c][j]).sum();
        let fn_: u64 = (0..C).filter(|&i| i != c).map(|i| self.counts[i][c]).sum();
        let tn = self.total() - tp - fp - fn_;
        ClassOutcome { tp, tn, fp, fn_ }
    }
}

impl std::ops::AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..C {
            for j in 0..C {
                self.counts[i][j] += rhs.counts[i][j];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassOutcome {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

pub fn build_confusion(preds: &[OcdClass], labels: &[OcdClass]) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::Shape {
            expected: format!("{} predictions", labels.len()),
            found: format!("{} predictions", preds.len()),
        });
    }
    if preds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &a) in preds.iter().zip(labels) {
        cm.record(p, a);
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Class-averaged `(TP + TN) / total`.
    pub overall_accuracy: f64,
    /// Micro-averaged `Σ TP / Σ (TP + FP)`.
    pub precision: f64,
    /// Micro-averaged `Σ TP / Σ (TP + FN)`.
    pub recall: f64,
    pub f1: f64,
    pub per_class: [ClassOutcome; C],
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let n = cm.total();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let per_class = OcdClass::ALL.map(|c| cm.outcome(c));
    let overall_accuracy = per_class
        .iter()
        .map(|o| (o.tp + o.tn) as f64 / (o.tp + o.tn + o.fp + o.fn_) as f64)
        .sum::<f64>()
        / C as f64;
    let tp: u64 = per_class.iter().map(|o| o.tp).sum();
    let tp_fp: u64 = per_class.iter().map(|o| o.tp + o.fp).sum();
    let tp_fn: u64 = per_class.iter().map(|o| o.tp + o.fn_).sum();
    let precision = tp as f64 / tp_fp as f64;
    let recall = tp as f64 / tp_fn as f64;
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(MetricsReport {
        overall_accuracy,
        precision,
        recall,
        f1,
        per_class,
    })
}

impl MetricsReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "metric,value")?;
        for (name, v) in [
            ("overall_accuracy", self.overall_accuracy),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
        ] {
            writeln!(w, "{name},{v}")?;
        }
        Ok(())
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>10} {:>6} {:>6} {:>6}", "pred\\act", "HI", "GAI", "OAI")?;
        for c in OcdClass::ALL {
            let row = &self.counts[c.index()];
            writeln!(f, "{:>10} {:>6} {:>6} {:>6}", c.as_str(), row[0], row[1], row[2])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use OcdClass::*;

    #[test]
    fn identity_predictions_give_diagonal() {
        let cm = build_confusion(&[Hi, Gai, Oai], &[Hi, Gai, Oai]).unwrap();
        assert_eq!(cm.counts, [[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        assert!(cm.is_diagonal());
    }

    #[test]
    fn constant_predictor_fills_one_row() {
        let cm = build_confusion(&[Hi, Hi, Hi], &[Hi, Gai, Oai]).unwrap();
        assert_eq!(cm.counts, [[1, 1, 1], [0, 0, 0], [0, 0, 0]]);
    }

    #[test]
    fn length_mismatch_and_empty() {
        assert!(build_confusion(&[Hi], &[Hi, Gai]).is_err());
        assert!(build_confusion(&[], &[]).is_err());
        assert!(compute_metrics(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn outcomes_match_explicit_region_sums() {
        let cm = ConfusionMatrix::from_counts([[8, 1, 1], [0, 9, 1], [2, 0, 8]]);
        let m = &cm.counts;
        // 1-based CM[i,j] = m[i-1][j-1]
        let expected = [
            ClassOutcome { tp: m[0][0], tn: m[1][1] + m[1][2] + m[2][1] + m[2][2], fp: m[0][1] + m[0][2], fn_: m[1][0] + m[2][0] },
            ClassOutcome { tp: m[1][1], tn: m[0][0] + m[0][2] + m[2][0] + m[2][2], fp: m[1][0] + m[1][2], fn_: m[0][1] + m[2][1] },
            ClassOutcome { tp: m[2][2], tn: m[0][0] + m[0][1] + m[1][0] + m[1][1], fp: m[2][0] + m[2][1], fn_: m[0][2] + m[1][2] },
        ];
        for c in OcdClass::ALL {
            assert_eq!(cm.outcome(c), expected[c.index()]);
        }
    }

    #[test]
    fn perfect_classifier() {
        let r = compute_metrics(&ConfusionMatrix::from_counts([[10, 0, 0], [0, 10, 0], [0, 0, 10]])).unwrap();
        assert_eq!((r.overall_accuracy, r.precision, r.recall, r.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn hand_worked_matrix() {
        let r = compute_metrics(&ConfusionMatrix::from_counts([[8, 1, 1], [0, 9, 1], [2, 0, 8]])).unwrap();
        assert_relative_eq!(r.precision, 25.0 / 30.0, epsilon = 1e-12);
        assert_relative_eq!(r.recall, 25.0 / 30.0, epsilon = 1e-12);
        assert_relative_eq!(r.f1, 25.0 / 30.0, epsilon = 1e-12);
        assert_relative_eq!(r.overall_accuracy, 80.0 / 90.0, epsilon = 1e-12);
    }

    #[test]
    fn csv_export() {
        let r = compute_metrics(&ConfusionMatrix::from_counts([[1, 0, 0], [0, 1, 0], [0, 0, 1]])).unwrap();
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("metric,value\noverall_accuracy,1\n"), "{text}");
    }
}
