use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, OcdClass};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// A seeded partition of `0..n` into `k` near-equal folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Every index outside fold `i`, in fold order.
    pub fn training_indices(&self, i: usize) -> Vec<usize> {
        self.folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect()
    }
}

/// Shuffles `0..n` with `seed` and deals it into `k` contiguous folds; the
/// first `n % k` folds get one extra index.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(Error::InvalidInput(format!("fold count {k} must satisfy 2 <= k <= n = {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));

    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        folds.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(FoldPlan { k, seed, folds })
}

/// Seeded per-class split: about `test_fraction` of every class goes to
/// the second dataset. Both halves keep the original sample order.
pub fn stratified_split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidInput(format!("test fraction {test_fraction} must be in (0, 1)")));
    }
    let mut in_test = vec![false; data.len()];
    for class in OcdClass::ALL {
        let mut members: Vec<usize> = data
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == class)
            .map(|(i, _)| i)
            .collect();
        members.shuffle(&mut rng_from_seed(derive_seed(seed, class.index() as u64)));
        let take = (members.len() as f64 * test_fraction).round() as usize;
        for &i in &members[..take] {
            in_test[i] = true;
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| in_test[i]);
    Ok((data.subset(&train), data.subset(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_division() {
        let p = make_folds(9, 3, 1).unwrap();
        assert!(p.folds.iter().all(|f| f.len() == 3));
        let mut all: Vec<usize> = p.folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn near_equal_split() {
        let p = make_folds(10, 3, 1).unwrap();
        let sizes: Vec<usize> = p.folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(make_folds(50, 5, 42).unwrap(), make_folds(50, 5, 42).unwrap());
        assert_ne!(make_folds(50, 5, 42).unwrap(), make_folds(50, 5, 43).unwrap());
    }

    #[test]
    fn stratified_split_keeps_class_proportions() {
        use crate::data::{BiomarkerVector, LabeledSample};
        let d: Dataset = (0..90)
            .map(|i| {
                let x = BiomarkerVector::from_array([i as f64; 5]).unwrap();
                LabeledSample::new(x, OcdClass::ALL[i % 3])
            })
            .collect();
        let (train, test) = stratified_split(&d, 1.0 / 3.0, 5).unwrap();
        assert_eq!(train.class_counts(), [20, 20, 20]);
        assert_eq!(test.class_counts(), [10, 10, 10]);
        assert_eq!(stratified_split(&d, 1.0 / 3.0, 5).unwrap(), (train, test));
        assert!(stratified_split(&d, 1.0, 5).is_err());
    }

    #[test]
    fn invalid_k() {
        assert!(make_folds(5, 1, 0).is_err());
        assert!(make_folds(5, 6, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_indices(n in 2usize..200, k_frac in 0.0f64..1.0, seed: u64) {
            let k = 2 + ((n - 2) as f64 * k_frac) as usize;
            let p = make_folds(n, k, seed).unwrap();
            prop_assert_eq!(p.folds.len(), k);
            let mut all: Vec<usize> = p.folds.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let max = p.folds.iter().map(Vec::len).max().unwrap();
            let min = p.folds.iter().map(Vec::len).min().unwrap();
            prop_assert!(max - min <= 1);
            for i in 0..k {
                prop_assert_eq!(p.training_indices(i).len() + p.folds[i].len(), n);
            }
        }
    }
}
