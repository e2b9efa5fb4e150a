use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ActivationKind;
use crate::data::{FEATURE_COUNT, OcdClass};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Layer sizes `(n₀, …, n_L)` plus the hidden-layer activation.
///
/// Hidden layers use `activation`; the output layer always uses the
/// logistic function so that one-hot targets in `{0, 1}` are reachable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetworkModel {
    pub layer_sizes: Vec<usize>,
    pub activation: ActivationKind,
}

impl NetworkModel {
    pub fn new(layer_sizes: Vec<usize>, activation: ActivationKind) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "topology {layer_sizes:?} needs at least two layers of non-zero width"
            )));
        }
        Ok(Self {
            layer_sizes,
            activation,
        })
    }

    /// `(5, hidden..., 3)`.
    pub fn ocd(hidden: &[usize], activation: ActivationKind) -> Result<Self> {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(FEATURE_COUNT);
        sizes.extend_from_slice(hidden);
        sizes.push(OcdClass::COUNT);
        Self::new(sizes, activation)
    }

    /// Number of computational layers `L`.
    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn outputs(&self) -> usize {
        *self.layer_sizes.last().expect("validated topology")
    }

    pub fn hidden_layers(&self) -> &[usize] {
        &self.layer_sizes[1..self.layer_sizes.len() - 1]
    }

    /// Activation of computational layer `l` (1-based).
    pub fn layer_activation(&self, l: usize) -> ActivationKind {
        if l == self.depth() {
            ActivationKind::Logistic
        } else {
            self.activation
        }
    }

    pub fn is_ocd_shaped(&self) -> bool {
        self.inputs() == FEATURE_COUNT && self.outputs() == OcdClass::COUNT
    }

    pub fn require_ocd_shape(&self) -> Result<()> {
        if self.is_ocd_shaped() {
            Ok(())
        } else {
            Err(Error::Shape {
                expected: format!("{FEATURE_COUNT} inputs and {} outputs", OcdClass::COUNT),
                found: self.topology_string(),
            })
        }
    }

    /// Dash-joined layer sizes, e.g. `5-6-3`.
    pub fn topology_string(&self) -> String {
        format_topology(&self.layer_sizes)
    }

    pub fn weight_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }
}

impl fmt::Display for NetworkModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.topology_string(), self.activation)
    }
}

pub fn format_topology(sizes: &[usize]) -> String {
    sizes.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

/// Parses `5-6-3` (commas and `x` also accepted as separators).
pub fn parse_topology(s: &str) -> Result<Vec<usize>> {
    s.split(['-', ',', 'x'])
        .map(|p| {
            usize::from_str(p.trim()).map_err(|_| Error::InvalidInput(format!("bad topology {s:?}")))
        })
        .collect()
}

/// Weights of one computational layer: `(inputs + 1) × outputs`, row-major,
/// with row 0 holding the biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    pub inputs: usize,
    pub outputs: usize,
    pub values: Vec<f64>,
}

impl LayerWeights {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            values: vec![0.0; (inputs + 1) * outputs],
        }
    }

    /// Weight from input `j` (0 = bias) to unit `i`.
    #[inline]
    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.outputs + i]
    }

    #[inline]
    pub fn get_mut(&mut self, j: usize, i: usize) -> &mut f64 {
        &mut self.values[j * self.outputs + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.outputs..(j + 1) * self.outputs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.outputs)
    }
}

/// One [`LayerWeights`] per computational layer, input side first. Also
/// used to hold gradients of the same shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub layers: Vec<LayerWeights>,
}

impl WeightSet {
    pub fn zeros(model: &NetworkModel) -> Self {
        Self {
            layers: model.layer_sizes.windows(2).map(|w| LayerWeights::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn validate(&self, model: &NetworkModel) -> Result<()> {
        let shapes_match = self.layers.len() == model.depth()
            && self.layers.iter().zip(model.layer_sizes.windows(2)).all(|(layer, w)| {
                layer.inputs == w[0] && layer.outputs == w[1] && layer.values.len() == (w[0] + 1) * w[1]
            });
        if !shapes_match {
            return Err(Error::Shape {
                expected: model.topology_string(),
                found: self.shape_string(),
            });
        }
        if !self.is_finite() {
            return Err(Error::InvalidInput("weights must be finite".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.values.iter().all(|v| v.is_finite()))
    }

    fn shape_string(&self) -> String {
        let mut sizes: Vec<usize> = self.layers.iter().map(|l| l.inputs).collect();
        sizes.extend(self.layers.last().map(|l| l.outputs));
        format_topology(&sizes)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| l.values.iter().copied())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers.iter_mut().flat_map(|l| l.values.iter_mut())
    }
}

/// Draws every weight i.i.d. from `Normal(0, init_std²)`, layer by layer,
/// row-major.
pub fn init_weights(model: &NetworkModel, seed: u64, init_std: f64) -> Result<WeightSet> {
    if !(init_std >= 0.0) || !init_std.is_finite() {
        return Err(Error::InvalidInput(format!("init_std {init_std} must be finite and non-negative")));
    }
    let normal = Normal::new(0.0, init_std)
        .map_err(|e| Error::InvalidInput(format!("init_std {init_std}: {e}")))?;
    let mut rng = rng_from_seed(seed);
    let mut weights = WeightSet::zeros(model);
    for w in weights.values_mut() {
        *w = normal.sample(&mut rng);
    }
    Ok(weights)
}

/// Pre-activations `v^l` and outputs `y^l` of every layer for one input.
/// `outputs[0]` is the input itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub pre_activations: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub derivatives: Vec<Vec<f64>>,
}

impl ForwardPass {
    pub fn new(model: &NetworkModel) -> Self {
        let mut pre = vec![Vec::new()];
        let mut out = vec![vec![0.0; model.inputs()]];
        let mut der = vec![Vec::new()];
        for &n in &model.layer_sizes[1..] {
            pre.push(vec![0.0; n]);
            out.push(vec![0.0; n]);
            der.push(vec![0.0; n]);
        }
        Self {
            pre_activations: pre,
            outputs: out,
            derivatives: der,
        }
    }

    /// The network output `y^L`.
    pub fn output(&self) -> &[f64] {
        self.outputs.last().expect("at least one layer")
    }
}

fn check_input(model: &NetworkModel, weights: &WeightSet, x: &[f64]) -> Result<()> {
    if weights.layers.len() != model.depth()
        || weights.layers.iter().zip(model.layer_sizes.windows(2)).any(|(l, w)| l.inputs != w[0] || l.outputs != w[1])
    {
        return Err(Error::Shape {
            expected: model.topology_string(),
            found: weights.shape_string(),
        });
    }
    if x.len() != model.inputs() {
        return Err(Error::Shape {
            expected: format!("{} inputs", model.inputs()),
            found: format!("{} inputs", x.len()),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("network input must be finite".into()));
    }
    Ok(())
}

/// Fills `pass` layer by layer: `v_i = ω_{0i} + Σ_j ω_{ji} y_j`, `y_i = ψ(v_i)`.
pub(crate) fn forward_into(model: &NetworkModel, weights: &WeightSet, x: &[f64], pass: &mut ForwardPass) {
    pass.outputs[0].copy_from_slice(x);
    for l in 1..=model.depth() {
        let layer = &weights.layers[l - 1];
        let act = model.layer_activation(l);
        let (before, after) = pass.outputs.split_at_mut(l);
        let input = &before[l - 1];
        let output = &mut after[0];
        let pre = &mut pass.pre_activations[l];
        pre.copy_from_slice(layer.row(0));
        for (j, &y) in input.iter().enumerate() {
            for (v, w) in pre.iter_mut().zip(layer.row(j + 1)) {
                *v += w * y;
            }
        }
        for ((v, y), d) in pre.iter().zip(output.iter_mut()).zip(pass.derivatives[l].iter_mut()) {
            (*y, *d) = act.eval(*v);
        }
    }
}

pub fn forward(model: &NetworkModel, weights: &WeightSet, x: &[f64]) -> Result<ForwardPass> {
    check_input(model, weights, x)?;
    let mut pass = ForwardPass::new(model);
    forward_into(model, weights, x, &mut pass);
    Ok(pass)
}

/// `E = ½ Σ (t_i − y_i)²`.
pub fn error_energy(output: &[f64], target: &[f64]) -> f64 {
    0.5 * output.iter().zip(target).map(|(y, t)| (t - y) * (t - y)).sum::<f64>()
}

fn check_target(model: &NetworkModel, t: &[f64]) -> Result<()> {
    let ones = t.iter().filter(|&&v| v == 1.0).count();
    let zeros = t.iter().filter(|&&v| v == 0.0).count();
    if t.len() != model.outputs() || ones != 1 || ones + zeros != t.len() {
        return Err(Error::InvalidInput(format!("target {t:?} is not one-hot over {} outputs", model.outputs())));
    }
    Ok(())
}

/// Local gradients `γ^l` for every computational layer, from a completed
/// forward pass. Output layer: `γ_i = (t_i − y_i) ψ'(v_i)`; hidden layers:
/// `γ_i = ψ'(v_i) Σ_k γ_k ω_{ik}`.
pub(crate) fn local_gradients_into(
    model: &NetworkModel,
    weights: &WeightSet,
    pass: &ForwardPass,
    t: &[f64],
    gammas: &mut [Vec<f64>],
) {
    let depth = model.depth();
    for ((g, (y, tt)), d) in gammas[depth]
        .iter_mut()
        .zip(pass.outputs[depth].iter().zip(t))
        .zip(&pass.derivatives[depth])
    {
        *g = (tt - y) * d;
    }
    for l in (1..depth).rev() {
        let next = &weights.layers[l];
        let (head, tail) = gammas.split_at_mut(l + 1);
        let upper = &tail[0];
        for (i, g) in head[l].iter_mut().enumerate() {
            let back: f64 = next.row(i + 1).iter().zip(upper).map(|(w, gk)| w * gk).sum();
            *g = pass.derivatives[l][i] * back;
        }
    }
}

pub(crate) fn gamma_buffers(model: &NetworkModel) -> Vec<Vec<f64>> {
    std::iter::once(Vec::new())
        .chain(model.layer_sizes[1..].iter().map(|&n| vec![0.0; n]))
        .collect()
}

/// Gradients of `E = ½ Σ ξ²` with respect to every weight:
/// `∂E/∂ω_{ji}^l = −γ_i^l y_j^{l−1}` with `y_0 = 1` for the bias row.
pub fn backprop_gradients(model: &NetworkModel, weights: &WeightSet, x: &[f64], t: &[f64]) -> Result<WeightSet> {
    check_input(model, weights, x)?;
    check_target(model, t)?;
    let mut pass = ForwardPass::new(model);
    forward_into(model, weights, x, &mut pass);
    let mut gammas = gamma_buffers(model);
    local_gradients_into(model, weights, &pass, t, &mut gammas);

    let mut grads = WeightSet::zeros(model);
    for (l, layer) in grads.layers.iter_mut().enumerate() {
        let gamma = &gammas[l + 1];
        let input = &pass.outputs[l];
        for (i, g) in gamma.iter().enumerate() {
            *layer.get_mut(0, i) = -g;
            for (j, y) in input.iter().enumerate() {
                *layer.get_mut(j + 1, i) = -g * y;
            }
        }
    }
    Ok(grads)
}

/// One-hot encoding of a class over the three output units.
pub fn one_hot(class: OcdClass) -> [f64; 3] {
    let mut t = [0.0; 3];
    t[class.index()] = 1.0;
    t
}
