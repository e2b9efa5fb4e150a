//! Seeded three-class Gaussian biomarker data.
//!
//! Classes share one diagonal covariance. Presets place the class means on
//! an equilateral triangle in standardized units, so every pair of classes
//! is the same number of standard deviations apart.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{BiomarkerVector, Dataset, LabeledSample, OcdClass, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// Mean vector per class, indexed by [`OcdClass::index`].
    pub means: [[f64; FEATURE_COUNT]; 3],
    /// Per-feature standard deviation shared by all classes.
    pub stds: [f64; FEATURE_COUNT],
    pub counts: [usize; 3],
    pub seed: u64,
}

/// Healthy-range reference values in assay units (SD, GP, CAT, MAL, SC).
const BASE_MEANS: [f64; FEATURE_COUNT] = [1.25, 45.0, 3.6, 2.4, 14.0];
const BASE_STDS: [f64; FEATURE_COUNT] = [0.15, 6.0, 0.4, 0.3, 2.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Class means 6 standard deviations apart.
    Separable,
    /// Class means 1.5 standard deviations apart.
    Overlapping,
}

impl Preset {
    pub fn separation(self) -> f64 {
        match self {
            Preset::Separable => 6.0,
            Preset::Overlapping => 1.5,
        }
    }

    pub fn spec(self, per_class: usize, seed: u64) -> SynthSpec {
        SynthSpec::equilateral(self.separation(), per_class, seed)
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "separable" => Ok(Preset::Separable),
            "overlapping" => Ok(Preset::Overlapping),
            _ => Err(Error::InvalidInput(format!("unknown preset {s:?} (separable | overlapping)"))),
        }
    }
}

impl SynthSpec {
    /// Means at `base`, `base + d·u` and `base + d·(u/2 + √3/2·v)` in
    /// standardized units, with `u`, `v` orthonormal directions touching
    /// all five markers.
    pub fn equilateral(separation: f64, per_class: usize, seed: u64) -> Self {
        let u = [1.0, 1.0, 1.0, 1.0, 1.0].map(|x: f64| x / 5f64.sqrt());
        let v = [0.5, -0.5, 0.5, -0.5, 0.0];
        let h = 3f64.sqrt() / 2.0;
        let offsets = [[0.0; FEATURE_COUNT], u.map(|x| separation * x), std::array::from_fn(|i| separation * (0.5 * u[i] + h * v[i]))];
        let means = offsets.map(|z| std::array::from_fn(|i| BASE_MEANS[i] + BASE_STDS[i] * z[i]));
        Self {
            means,
            stds: BASE_STDS,
            counts: [per_class; 3],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stds.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput("standard deviations must be positive".into()));
        }
        if self.counts.contains(&0) {
            return Err(Error::InvalidInput("every class needs at least one sample".into()));
        }
        if self.means.iter().flatten().any(|m| !m.is_finite()) {
            return Err(Error::InvalidInput("means must be finite".into()));
        }
        Ok(())
    }

    /// Smallest distance between two class means in standardized units.
    pub fn min_separation(&self) -> f64 {
        let mut min = f64::INFINITY;
        for a in 0..3 {
            for b in a + 1..3 {
                let d: f64 = (0..FEATURE_COUNT)
                    .map(|i| ((self.means[a][i] - self.means[b][i]) / self.stds[i]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                min = min.min(d);
            }
        }
        min
    }
}

/// Draws `counts[c]` samples per class, class-major. Class `c` uses the seed
/// stream `c`, so changing one class count leaves other classes unchanged.
pub fn generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut samples = Vec::with_capacity(spec.counts.iter().sum());
    for class in OcdClass::ALL {
        let mut rng = rng_from_seed(derive_seed(spec.seed, class.index() as u64));
        let dists: Vec<Normal<f64>> = (0..FEATURE_COUNT)
            .map(|i| Normal::new(spec.means[class.index()][i], spec.stds[i]).expect("validated std"))
            .collect();
        for _ in 0..spec.counts[class.index()] {
            let values: [f64; FEATURE_COUNT] = std::array::from_fn(|i| dists[i].sample(&mut rng));
            samples.push(LabeledSample::new(BiomarkerVector::from_array(values)?, class));
        }
    }
    Ok(Dataset::new(samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_class_counts_in_class_major_order() {
        let d = generate(&Preset::Separable.spec(50, 1)).unwrap();
        assert_eq!(d.len(), 150);
        assert_eq!(d.class_counts(), [50, 50, 50]);
        assert!(d.samples()[..50].iter().all(|s| s.label == OcdClass::Hi));
        assert!(d.samples()[100..].iter().all(|s| s.label == OcdClass::Oai));
    }

    #[test]
    fn deterministic() {
        let s = Preset::Overlapping.spec(20, 9);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        assert_ne!(generate(&s).unwrap(), generate(&Preset::Overlapping.spec(20, 10)).unwrap());
    }

    #[test]
    fn presets_have_the_stated_separation() {
        assert_relative_eq!(Preset::Separable.spec(1, 0).min_separation(), 6.0, epsilon = 1e-12);
        assert_relative_eq!(Preset::Overlapping.spec(1, 0).min_separation(), 1.5, epsilon = 1e-12);
        assert_eq!("Separable".parse::<Preset>().unwrap(), Preset::Separable);
        assert!("other".parse::<Preset>().is_err());
    }

    #[test]
    fn invalid_spec() {
        let mut s = Preset::Separable.spec(10, 0);
        s.stds[2] = 0.0;
        assert!(generate(&s).is_err());
        let mut s = Preset::Separable.spec(10, 0);
        s.counts[1] = 0;
        assert!(generate(&s).is_err());
    }

    #[test]
    fn class_means_converge() {
        let spec = Preset::Overlapping.spec(2000, 4);
        let d = generate(&spec).unwrap();
        for class in OcdClass::ALL {
            let rows: Vec<[f64; 5]> = d.iter().filter(|s| s.label == class).map(|s| s.features.to_array()).collect();
            let n = rows.len() as f64;
            for f in 0..FEATURE_COUNT {
                let mean = rows.iter().map(|r| r[f]).sum::<f64>() / n;
                let se = spec.stds[f] / n.sqrt();
                assert!((mean - spec.means[class.index()][f]).abs() < 5.0 * se);
            }
        }
    }
}
