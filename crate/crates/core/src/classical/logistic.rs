//! Logistic regression fitted by full-batch gradient ascent on the
//! log-likelihood, lifted to three classes one-vs-rest.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{BiomarkerVector, Dataset, OcdClass, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// Gradient ascent step size.
    pub rho: f64,
    /// Stop once the coefficient update is shorter than this.
    pub eps: f64,
    pub max_iter: usize,
    /// Std of the normal draw for the starting coefficients.
    pub init_std: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            rho: 0.005,
            eps: 1e-6,
            max_iter: 50_000,
            init_std: 0.01,
        }
    }
}

/// Outcome of one binary fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryFit {
    /// Intercept first, then one coefficient per feature.
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn linear(beta: &[f64], x: &[f64]) -> f64 {
    beta[0] + beta[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
}

fn check_problem(features: &[Vec<f64>], labels: &[bool]) -> Result<usize> {
    if features.len() != labels.len() {
        return Err(Error::Shape {
            expected: format!("{} labels", features.len()),
            found: format!("{} labels", labels.len()),
        });
    }
    let dim = features.first().map_or(0, Vec::len);
    if let Some(row) = features.iter().find(|r| r.len() != dim) {
        return Err(Error::Shape {
            expected: format!("{dim} features per row"),
            found: format!("{} features", row.len()),
        });
    }
    Ok(dim)
}

/// `l(β) = Σ y·βᵀs − ln(1 + e^{βᵀs})`.
pub fn log_likelihood(beta: &[f64], features: &[Vec<f64>], labels: &[bool]) -> f64 {
    features
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            let z = linear(beta, x);
            if y { z - log1p_exp(z) } else { -log1p_exp(z) }
        })
        .sum()
}

/// `∇l(β) = Σ s_i (y_i − p(s_i; β))` with `s_i = (1, x_i)`.
pub fn log_likelihood_gradient(beta: &[f64], features: &[Vec<f64>], labels: &[bool]) -> Vec<f64> {
    let mut grad = vec![0.0; beta.len()];
    accumulate_gradient(beta, features, labels, &mut grad);
    grad
}

fn accumulate_gradient(beta: &[f64], features: &[Vec<f64>], labels: &[bool], grad: &mut [f64]) {
    grad.fill(0.0);
    for (x, &y) in features.iter().zip(labels) {
        let residual = f64::from(u8::from(y)) - sigmoid(linear(beta, x));
        grad[0] += residual;
        for (g, v) in grad[1..].iter_mut().zip(x) {
            *g += residual * v;
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gradient ascent `β ← β + ρ ∇l(β)` from a seeded normal start, until the
/// step length drops below `eps` or `max_iter` updates have been made.
pub fn lr_train_binary(features: &[Vec<f64>], labels: &[bool], cfg: &LogisticConfig, seed: u64) -> Result<BinaryFit> {
    let dim = check_problem(features, labels)?;
    if !labels.iter().any(|&y| y) || labels.iter().all(|&y| y) {
        return Err(Error::InvalidInput("binary logistic regression needs both classes".into()));
    }
    if !(cfg.rho > 0.0) || !(cfg.eps > 0.0) || cfg.max_iter == 0 {
        return Err(Error::InvalidInput("rho and eps must be positive, max_iter at least 1".into()));
    }
    let normal = Normal::new(0.0, cfg.init_std)
        .map_err(|e| Error::InvalidInput(format!("init_std: {e}")))?;
    let mut rng = rng_from_seed(seed);
    let mut beta: Vec<f64> = (0..=dim).map(|_| normal.sample(&mut rng)).collect();
    let mut grad = vec![0.0; dim + 1];

    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        accumulate_gradient(&beta, features, labels, &mut grad);
        iterations += 1;
        let mut step_sq = 0.0;
        for (b, g) in beta.iter_mut().zip(&grad) {
            let step = cfg.rho * g;
            *b += step;
            step_sq += step * step;
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::LogisticDiverged { iteration: iterations });
        }
        if step_sq.sqrt() < cfg.eps {
            converged = true;
            break;
        }
    }
    accumulate_gradient(&beta, features, labels, &mut grad);
    Ok(BinaryFit {
        coefficients: beta,
        iterations,
        converged,
        gradient_norm: norm(&grad),
    })
}

/// Per-class diagnostics of the one-vs-rest fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFitInfo {
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
}

/// Three one-vs-rest coefficient vectors, intercept first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub coefficients: [[f64; FEATURE_COUNT + 1]; 3],
    pub rho: f64,
    pub fits: Vec<LogisticFitInfo>,
}

impl LogisticModel {
    /// Untrained model with the given coefficients.
    pub fn from_coefficients(coefficients: [[f64; FEATURE_COUNT + 1]; 3]) -> Self {
        Self {
            coefficients,
            rho: 0.0,
            fits: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.iter().flatten().all(|b| b.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidInput("logistic coefficients must be finite".into()))
        }
    }
}

/// Trains class-vs-rest for each class; class `c` uses the seed stream `c`.
pub fn lr_train(data: &Dataset, cfg: &LogisticConfig, seed: u64) -> Result<LogisticModel> {
    data.require_all_classes()?;
    let features: Vec<Vec<f64>> = data.iter().map(|s| s.features.to_array().to_vec()).collect();
    let mut coefficients = [[0.0; FEATURE_COUNT + 1]; 3];
    let mut fits = Vec::with_capacity(3);
    for class in OcdClass::ALL {
        let labels: Vec<bool> = data.iter().map(|s| s.label == class).collect();
        let fit = lr_train_binary(&features, &labels, cfg, derive_seed(seed, class.index() as u64))?;
        coefficients[class.index()].copy_from_slice(&fit.coefficients);
        fits.push(LogisticFitInfo {
            iterations: fit.iterations,
            converged: fit.converged,
            gradient_norm: fit.gradient_norm,
        });
    }
    Ok(LogisticModel {
        coefficients,
        rho: cfg.rho,
        fits,
    })
}

/// Sigmoid score per class, argmax (lowest code on ties), and the scores
/// renormalized to sum to one.
pub fn lr_predict(model: &LogisticModel, x: &BiomarkerVector) -> Result<(OcdClass, [f64; 3])> {
    x.validate()?;
    let features = x.to_array();
    let mut scores = [0.0; 3];
    for (score, beta) in scores.iter_mut().zip(&model.coefficients) {
        *score = sigmoid(linear(beta, &features));
    }
    let class = OcdClass::argmax(&scores);
    let total: f64 = scores.iter().sum();
    let probabilities = if total > 0.0 {
        scores.map(|s| s / total)
    } else {
        [1.0 / 3.0; 3]
    };
    Ok((class, probabilities))
}
