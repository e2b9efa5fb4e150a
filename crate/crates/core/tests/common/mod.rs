//! Reference implementations used as oracles. Each one recomputes its
//! answer from the defining formula and shares no code path with the
//! library routine it checks.
#![allow(dead_code)]

use accu_core::data::{BiomarkerVector, Dataset, LabeledSample, OcdClass};
use accu_core::neural::{ActivationKind, NetworkModel, WeightSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Activation written from its textbook definition.
pub fn psi(kind: ActivationKind, v: f64) -> f64 {
    match kind {
        ActivationKind::Logistic => 1.0 / (1.0 + (-v).exp()),
        ActivationKind::Tanh => 2.0 / (1.0 + (-2.0 * v).exp()) - 1.0,
        ActivationKind::ArcTan => v.atan(),
        ActivationKind::Softplus => (1.0 + v.exp()).ln(),
    }
}

/// Straight-line forward pass: for every unit, bias plus weighted inputs,
/// then the activation (logistic on the output layer).
pub fn forward_oracle(model: &NetworkModel, weights: &WeightSet, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    let depth = model.layer_sizes.len() - 1;
    for l in 0..depth {
        let n_in = model.layer_sizes[l];
        let n_out = model.layer_sizes[l + 1];
        let flat = &weights.layers[l].values;
        let mut next = vec![0.0; n_out];
        for i in 0..n_out {
            let mut v = flat[i];
            for j in 0..n_in {
                v += flat[(j + 1) * n_out + i] * y[j];
            }
            let kind = if l + 1 == depth { ActivationKind::Logistic } else { model.activation };
            next[i] = psi(kind, v);
        }
        y = next;
    }
    y
}

pub fn energy_oracle(model: &NetworkModel, weights: &WeightSet, x: &[f64], t: &[f64]) -> f64 {
    forward_oracle(model, weights, x)
        .iter()
        .zip(t)
        .map(|(y, t)| 0.5 * (t - y) * (t - y))
        .sum()
}

/// Central differences of the error energy for every weight, in layer /
/// row-major order.
pub fn numeric_gradient(model: &NetworkModel, weights: &WeightSet, x: &[f64], t: &[f64], h: f64) -> Vec<f64> {
    let mut w = weights.clone();
    let mut out = Vec::new();
    for l in 0..w.layers.len() {
        for idx in 0..w.layers[l].values.len() {
            let orig = w.layers[l].values[idx];
            w.layers[l].values[idx] = orig + h;
            let plus = energy_oracle(model, &w, x, t);
            w.layers[l].values[idx] = orig - h;
            let minus = energy_oracle(model, &w, x, t);
            w.layers[l].values[idx] = orig;
            out.push((plus - minus) / (2.0 * h));
        }
    }
    out
}

/// `|a − b| / max(|a|, |b|, floor)`.
pub fn rel_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Gaussian Bayes rule from full densities: argmax_k π_k Π_i N(x_i; μ_ki, σ_i²).
pub fn gaussian_bayes_oracle(priors: &[f64], means: &[Vec<f64>], variances: &[f64], x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for k in 0..priors.len() {
        let mut density = 1.0;
        for i in 0..x.len() {
            let sigma = variances[i].sqrt();
            let z = (x[i] - means[k][i]) / sigma;
            density *= (-0.5 * z * z).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
        }
        let score = density * priors[k];
        if score > best_score {
            best = k;
            best_score = score;
        }
    }
    best
}

/// Full scan: every distance, stable sort, first k, strict majority with
/// lowest-code preference.
pub fn knn_oracle(data: &Dataset, k: usize, x: &BiomarkerVector) -> OcdClass {
    let q = x.to_array();
    let mut d: Vec<(f64, usize)> = data
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let p = s.features.to_array();
            let sq: f64 = (0..5).map(|f| (p[f] - q[f]).powi(2)).sum();
            (sq.sqrt(), i)
        })
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut counts = [0usize; 3];
    for &(_, i) in &d[..k] {
        counts[data.samples()[i].label.index()] += 1;
    }
    let mut winner = OcdClass::Hi;
    for c in [OcdClass::Gai, OcdClass::Oai] {
        if counts[c.index()] > counts[winner.index()] {
            winner = c;
        }
    }
    winner
}

/// Isotropic Gaussian clusters around `centres`, `per_class` each.
pub fn clusters(centres: [[f64; 5]; 3], spread: f64, per_class: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut samples = Vec::new();
    for (c, centre) in OcdClass::ALL.into_iter().zip(centres) {
        for _ in 0..per_class {
            let v: [f64; 5] = std::array::from_fn(|i| centre[i] + spread * gauss(&mut r));
            samples.push(LabeledSample::new(BiomarkerVector::from_array(v).unwrap(), c));
        }
    }
    Dataset::new(samples)
}

/// Box-Muller standard normal.
pub fn gauss(r: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = r.random::<f64>().max(1e-300);
    let u2: f64 = r.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn accuracy(preds: &[OcdClass], labels: &[OcdClass]) -> f64 {
    preds.iter().zip(labels).filter(|(p, l)| p == l).count() as f64 / labels.len() as f64
}
