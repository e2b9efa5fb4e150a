//! Exhaustive hyperparameter search over activation, step size, epoch
//! count and topology.
//!
//! Candidates are enumerated activation-outer, then step size, then epoch
//! count, then topology. Each candidate is trained with its own seed
//! derived from the search seed and its index, so candidates can be
//! evaluated in any order (or in parallel) with identical results. The
//! winner is picked by a sequential pass in index order that only replaces
//! the incumbent on a strictly higher test accuracy.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::neural::{format_topology, nn_predict, train, ActivationKind, NetworkModel, TrainConfig, WeightSet};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub activations: Vec<ActivationKind>,
    pub step_sizes: Vec<f64>,
    pub epochs: Vec<usize>,
    pub unit_min: usize,
    pub unit_max: usize,
    /// Hidden-layer counts to include, each in `0..=2`.
    pub hidden_layers: Vec<usize>,
    pub init_std: f64,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            activations: ActivationKind::ALL.to_vec(),
            step_sizes: vec![0.001, 0.005, 0.01],
            epochs: vec![2000, 5000, 10_000],
            unit_min: 3,
            unit_max: 15,
            hidden_layers: vec![0, 1, 2],
            init_std: 0.1,
        }
    }
}

impl HyperGrid {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if self.activations.is_empty() || self.step_sizes.is_empty() || self.epochs.is_empty() || self.hidden_layers.is_empty() {
            return fail("grid lists must be non-empty");
        }
        if self.unit_min == 0 || self.unit_min > self.unit_max {
            return fail("unit range must satisfy 1 <= low <= high");
        }
        if self.hidden_layers.iter().any(|&h| h > 2) {
            return fail("hidden layer counts must be 0, 1 or 2");
        }
        if self.step_sizes.iter().any(|r| !(*r > 0.0) || !r.is_finite()) || self.epochs.contains(&0) {
            return fail("step sizes and epoch counts must be positive");
        }
        if !(self.init_std > 0.0) {
            return fail("init_std must be positive");
        }
        Ok(())
    }

    pub fn candidate_count(&self) -> usize {
        self.activations.len() * self.step_sizes.len() * self.epochs.len() * topology_sizes(self).len()
    }
}

/// Topologies in traversal order: `(5,3)`, then `(5,i,3)` for ascending
/// `i`, then `(5,i,j,3)` with `j` outer and `i` inner.
fn topology_sizes(grid: &HyperGrid) -> Vec<Vec<usize>> {
    let units = grid.unit_min..=grid.unit_max;
    let mut out = Vec::new();
    for depth in 0..=2 {
        if !grid.hidden_layers.contains(&depth) {
            continue;
        }
        match depth {
            0 => out.push(vec![5, 3]),
            1 => out.extend(units.clone().map(|i| vec![5, i, 3])),
            _ => {
                for j in units.clone() {
                    out.extend(units.clone().map(|i| vec![5, i, j, 3]));
                }
            }
        }
    }
    out
}

/// Every topology the grid visits per (activation, step size, epochs).
/// The models carry the first activation of the grid.
pub fn candidate_topologies(grid: &HyperGrid) -> Vec<NetworkModel> {
    let activation = grid.activations.first().copied().unwrap_or(ActivationKind::Logistic);
    topology_sizes(grid)
        .into_iter()
        .map(|sizes| NetworkModel::new(sizes, activation).expect("positive unit range"))
        .collect()
}

/// One point of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub index: usize,
    pub model: NetworkModel,
    pub rho: f64,
    pub epochs: usize,
}

/// All candidates in search order.
pub fn enumerate_candidates(grid: &HyperGrid) -> Vec<Candidate> {
    let topologies = topology_sizes(grid);
    let mut out = Vec::with_capacity(grid.candidate_count());
    for &activation in &grid.activations {
        for &rho in &grid.step_sizes {
            for &epochs in &grid.epochs {
                for sizes in &topologies {
                    out.push(Candidate {
                        index: out.len(),
                        model: NetworkModel {
                            layer_sizes: sizes.clone(),
                            activation,
                        },
                        rho,
                        epochs,
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchLogEntry {
    pub index: usize,
    pub activation: ActivationKind,
    pub rho: f64,
    pub epochs: usize,
    pub topology: Vec<usize>,
    /// Test accuracy; 0 when training failed.
    pub accuracy: f64,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_model: NetworkModel,
    pub best_weights: WeightSet,
    pub best_accuracy: f64,
    /// Log index of the winner; `None` if no candidate beat accuracy 0.
    pub best_index: Option<usize>,
    pub best_rho: Option<f64>,
    pub best_epochs: Option<usize>,
    pub log: Vec<SearchLogEntry>,
}

impl SearchResult {
    /// True when every candidate failed to train.
    pub fn all_failed(&self) -> bool {
        self.log.iter().all(|e| e.failure.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub parallel: bool,
    /// Record wall-clock seconds per candidate; when off, the log is a pure
    /// function of the inputs.
    pub record_timing: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            parallel: true,
            record_timing: true,
        }
    }
}

/// Plain accuracy of the network on `td`.
pub fn model_accuracy_test(model: &NetworkModel, weights: &WeightSet, td: &Dataset) -> Result<f64> {
    if td.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut correct = 0usize;
    for s in td {
        if nn_predict(model, weights, &s.features)?.0 == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / td.len() as f64)
}

pub fn grid_search(tp: &Dataset, td: &Dataset, grid: &HyperGrid, seed: u64) -> Result<SearchResult> {
    grid_search_with(tp, td, grid, seed, &SearchOptions::default())
}

pub fn grid_search_with(tp: &Dataset, td: &Dataset, grid: &HyperGrid, seed: u64, opts: &SearchOptions) -> Result<SearchResult> {
    grid.validate()?;
    if tp.is_empty() || td.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let candidates = enumerate_candidates(grid);
    let run = |c: &Candidate| evaluate_candidate(c, tp, td, grid.init_std, seed, opts.record_timing);
    let outcomes: Vec<(SearchLogEntry, Option<WeightSet>)> = if opts.parallel {
        candidates.par_iter().map(run).collect()
    } else {
        candidates.iter().map(run).collect()
    };

    let initial = NetworkModel::ocd(&[], ActivationKind::Logistic).expect("valid");
    let mut result = SearchResult {
        best_weights: WeightSet::zeros(&initial),
        best_model: initial,
        best_accuracy: 0.0,
        best_index: None,
        best_rho: None,
        best_epochs: None,
        log: Vec::with_capacity(outcomes.len()),
    };
    for ((entry, weights), candidate) in outcomes.into_iter().zip(&candidates) {
        if let Some(w) = weights {
            if entry.accuracy > result.best_accuracy {
                result.best_accuracy = entry.accuracy;
                result.best_model = candidate.model.clone();
                result.best_weights = w;
                result.best_index = Some(entry.index);
                result.best_rho = Some(candidate.rho);
                result.best_epochs = Some(candidate.epochs);
            }
        }
        result.log.push(entry);
    }
    Ok(result)
}

fn evaluate_candidate(
    c: &Candidate,
    tp: &Dataset,
    td: &Dataset,
    init_std: f64,
    seed: u64,
    record_timing: bool,
) -> (SearchLogEntry, Option<WeightSet>) {
    let start = Instant::now();
    let cfg = TrainConfig {
        rho: c.rho,
        epochs: c.epochs,
        seed: derive_seed(seed, c.index as u64),
        init_std,
    };
    let outcome = train(&c.model, tp, &cfg).and_then(|o| {
        let acc = model_accuracy_test(&c.model, &o.weights, td)?;
        Ok((acc, o.weights))
    });
    let seconds = if record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
    let mut entry = SearchLogEntry {
        index: c.index,
        activation: c.model.activation,
        rho: c.rho,
        epochs: c.epochs,
        topology: c.model.layer_sizes.clone(),
        accuracy: 0.0,
        seconds,
        failure: None,
    };
    match outcome {
        Ok((acc, weights)) => {
            entry.accuracy = acc;
            (entry, Some(weights))
        }
        Err(e) => {
            entry.failure = Some(e.to_string());
            (entry, None)
        }
    }
}

pub const SEARCH_LOG_HEADER: &str = "index,activation,rho,epochs,topology,accuracy,seconds";

pub fn write_search_log_csv<W: Write>(log: &[SearchLogEntry], mut w: W) -> Result<()> {
    writeln!(w, "{SEARCH_LOG_HEADER}")?;
    for e in log {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            e.index,
            e.activation,
            e.rho,
            e.epochs,
            format_topology(&e.topology),
            e.accuracy,
            e.seconds
        )?;
    }
    Ok(())
}
