use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::{forward_into, gamma_buffers, local_gradients_into, one_hot, ForwardPass};
use super::{init_weights, NetworkModel, WeightSet};
use crate::data::{BiomarkerVector, Dataset, OcdClass};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Step size ρ. Zero is accepted and leaves the weights untouched.
    pub rho: f64,
    pub epochs: usize,
    pub seed: u64,
    pub init_std: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            rho: 0.005,
            epochs: 10_000,
            seed: 0,
            init_std: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be at least 1".into()));
        }
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidInput(format!("step size {} must be finite and non-negative", self.rho)));
        }
        if !(self.init_std >= 0.0) || !self.init_std.is_finite() {
            return Err(Error::InvalidInput(format!("init_std {} must be finite and non-negative", self.init_std)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub weights: WeightSet,
    /// Mean error energy over the training set after each epoch.
    pub error_trace: Vec<f64>,
}

/// Online backpropagation over arbitrary patterns.
///
/// Weights start from [`init_weights`] with `cfg.seed`; each epoch visits
/// every pattern once in an order shuffled from a seed stream derived from
/// `cfg.seed`, applying `ω_{ji} += ρ γ_i y_j` after every pattern.
pub fn train_patterns(
    model: &NetworkModel,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if inputs.len() != targets.len()
        || inputs.iter().any(|x| x.len() != model.inputs() || x.iter().any(|v| !v.is_finite()))
        || targets.iter().any(|t| t.len() != model.outputs())
    {
        return Err(Error::Shape {
            expected: format!("finite patterns of width {} with targets of width {}", model.inputs(), model.outputs()),
            found: format!("{} inputs, {} targets", inputs.len(), targets.len()),
        });
    }

    let mut weights = init_weights(model, cfg.seed, cfg.init_std)?;
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut shuffle_rng = rng_from_seed(derive_seed(cfg.seed, 1));
    let mut pass = ForwardPass::new(model);
    let mut gammas = gamma_buffers(model);
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for &m in &order {
            forward_into(model, &weights, &inputs[m], &mut pass);
            local_gradients_into(model, &weights, &pass, &targets[m], &mut gammas);
            if !apply_update(&mut weights, &pass, &gammas, cfg.rho) {
                return Err(Error::NetworkDiverged { epoch, sample: m });
            }
        }
        let total: f64 = inputs
            .iter()
            .zip(targets)
            .map(|(x, t)| {
                forward_into(model, &weights, x, &mut pass);
                super::error_energy(pass.output(), t)
            })
            .sum();
        trace.push(total / inputs.len() as f64);
    }
    Ok(TrainOutcome {
        weights,
        error_trace: trace,
    })
}

/// `ω_{ji}^l += ρ γ_i^l y_j^{l−1}`; returns false if any weight went non-finite.
fn apply_update(weights: &mut WeightSet, pass: &ForwardPass, gammas: &[Vec<f64>], rho: f64) -> bool {
    let mut finite = true;
    for (l, layer) in weights.layers.iter_mut().enumerate() {
        let gamma = &gammas[l + 1];
        let outputs = layer.outputs;
        let (bias, rest) = layer.values.split_at_mut(outputs);
        for (w, g) in bias.iter_mut().zip(gamma) {
            *w += rho * g;
            finite &= w.is_finite();
        }
        for (row, &y) in rest.chunks_mut(outputs).zip(&pass.outputs[l]) {
            let scale = rho * y;
            for (w, g) in row.iter_mut().zip(gamma) {
                *w += scale * g;
                finite &= w.is_finite();
            }
        }
    }
    finite
}

/// Trains a `(5, …, 3)` network on a normalized dataset with one-hot targets.
pub fn train(model: &NetworkModel, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    model.require_ocd_shape()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let inputs: Vec<Vec<f64>> = data.iter().map(|s| s.features.to_array().to_vec()).collect();
    let targets: Vec<Vec<f64>> = data.iter().map(|s| one_hot(s.label).to_vec()).collect();
    train_patterns(model, &inputs, &targets, cfg)
}

/// Argmax over the three output units (lowest code on ties) and the raw
/// output vector.
pub fn nn_predict(model: &NetworkModel, weights: &WeightSet, x: &BiomarkerVector) -> Result<(OcdClass, [f64; 3])> {
    model.require_ocd_shape()?;
    let pass = super::forward(model, weights, &x.to_array())?;
    let output: [f64; 3] = pass.output().try_into().expect("three outputs");
    Ok((OcdClass::argmax(&output), output))
}
