//! k-nearest-neighbour majority vote under Euclidean distance.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::{BiomarkerVector, Dataset, OcdClass, FEATURE_COUNT};
use crate::error::{Error, Result};

/// Stored (normalized) training points and the neighbourhood size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub points: Vec<[f64; FEATURE_COUNT]>,
    pub labels: Vec<OcdClass>,
}

impl KnnModel {
    pub fn new(data: &Dataset, k: usize) -> Result<Self> {
        let model = Self {
            k,
            points: data.iter().map(|s| s.features.to_array()).collect(),
            labels: data.labels(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.points.len() || self.points.len() != self.labels.len() {
            return Err(Error::InvalidInput(format!(
                "k = {} must be in 1..={} stored samples",
                self.k,
                self.points.len()
            )));
        }
        Ok(())
    }

    /// Indices of the `k` nearest stored samples, nearest first. Equal
    /// distances rank the lower stored index first.
    pub fn neighbours(&self, x: &BiomarkerVector) -> Vec<usize> {
        let q = x.to_array();
        let mut ranked: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (euclidean(&q, p), i))
            .collect();
        let by_rank = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < ranked.len() {
            ranked.select_nth_unstable_by(self.k - 1, by_rank);
            ranked.truncate(self.k);
        }
        ranked.sort_unstable_by(by_rank);
        ranked.into_iter().map(|(_, i)| i).collect()
    }

    /// Neighbour counts per class among the `k` nearest.
    pub fn votes(&self, x: &BiomarkerVector) -> [usize; 3] {
        let mut counts = [0; 3];
        for i in self.neighbours(x) {
            counts[self.labels[i].index()] += 1;
        }
        counts
    }
}

fn euclidean(a: &[f64; FEATURE_COUNT], b: &[f64; FEATURE_COUNT]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Majority class among the `k` nearest; ties go to the lowest class code.
pub fn knn_predict(model: &KnnModel, x: &BiomarkerVector) -> OcdClass {
    let votes = model.votes(x);
    let mut best = 0;
    for c in 1..3 {
        if votes[c].cmp(&votes[best]) == Ordering::Greater {
            best = c;
        }
    }
    OcdClass::ALL[best]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabeledSample;

    fn point(v: f64) -> BiomarkerVector {
        BiomarkerVector::from_array([v, 0.0, 0.0, 0.0, 0.0]).unwrap()
    }

    fn model(points: &[(f64, OcdClass)], k: usize) -> KnnModel {
        let d: Dataset = points.iter().map(|&(v, c)| LabeledSample::new(point(v), c)).collect();
        KnnModel::new(&d, k).unwrap()
    }

    #[test]
    fn k1_exact_match() {
        let m = model(&[(0.0, OcdClass::Hi), (1.0, OcdClass::Gai), (2.0, OcdClass::Oai)], 1);
        assert_eq!(knn_predict(&m, &point(1.0)), OcdClass::Gai);
        assert_eq!(knn_predict(&m, &point(2.0)), OcdClass::Oai);
    }

    #[test]
    fn k3_majority() {
        let m = model(
            &[(0.1, OcdClass::Hi), (0.2, OcdClass::Hi), (0.3, OcdClass::Oai), (5.0, OcdClass::Gai), (6.0, OcdClass::Gai)],
            3,
        );
        assert_eq!(m.votes(&point(0.0)), [2, 0, 1]);
        assert_eq!(knn_predict(&m, &point(0.0)), OcdClass::Hi);
    }

    #[test]
    fn k2_split_vote_goes_to_lowest_code() {
        let m = model(&[(0.1, OcdClass::Oai), (0.2, OcdClass::Hi), (3.0, OcdClass::Gai)], 2);
        assert_eq!(knn_predict(&m, &point(0.0)), OcdClass::Hi);
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        // Both at distance 1; the k = 1 slot goes to stored index 0.
        let m = model(&[(1.0, OcdClass::Oai), (-1.0, OcdClass::Hi)], 1);
        assert_eq!(m.neighbours(&point(0.0)), vec![0]);
        assert_eq!(knn_predict(&m, &point(0.0)), OcdClass::Oai);
    }

    #[test]
    fn k_out_of_range_is_rejected() {
        let d: Dataset = [LabeledSample::new(point(0.0), OcdClass::Hi)].into_iter().collect();
        assert!(KnnModel::new(&d, 0).is_err());
        assert!(KnnModel::new(&d, 2).is_err());
    }
}
