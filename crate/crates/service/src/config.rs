//! TOML configuration file. Every key is optional; command-line flags and
//! `ACCU_*` environment variables take precedence over it.
//!
//! ```toml
//! bind = "127.0.0.1:8080"
//! store_dir = "accu-store"
//! threshold = 30
//! seed = 0
//! test_fraction = 0.3333333333333333
//! kind = "HONN"
//! record_timing = true
//!
//! [grid]
//! activations = ["Logistic", "Tanh"]
//! step_sizes = [0.005]
//! epochs = [2000]
//! unit_min = 3
//! unit_max = 8
//! hidden_layers = [0, 1, 2]
//! init_std = 0.1
//! ```

use std::path::{Path, PathBuf};

use accu_core::honn::HyperGrid;
use accu_core::neural::ActivationKind;
use serde::Deserialize;

use crate::error::{ServiceError, ServiceResult};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub bind: Option<String>,
    pub store_dir: Option<PathBuf>,
    pub threshold: Option<usize>,
    pub seed: Option<u64>,
    pub test_fraction: Option<f64>,
    pub kind: Option<String>,
    pub record_timing: Option<bool>,
    #[serde(default)]
    pub grid: GridConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub activations: Option<Vec<String>>,
    pub step_sizes: Option<Vec<f64>>,
    pub epochs: Option<Vec<usize>>,
    pub unit_min: Option<usize>,
    pub unit_max: Option<usize>,
    pub hidden_layers: Option<Vec<usize>>,
    pub init_std: Option<f64>,
}

impl FileConfig {
    pub fn parse(text: &str) -> ServiceResult<Self> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> ServiceResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))
    }

    /// Loads `path` if given, otherwise an empty configuration.
    pub fn load_optional(path: Option<&Path>) -> ServiceResult<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

impl GridConfig {
    /// The default grid with any configured fields replaced.
    pub fn to_grid(&self) -> ServiceResult<HyperGrid> {
        let mut grid = HyperGrid::default();
        if let Some(names) = &self.activations {
            grid.activations = names
                .iter()
                .map(|n| n.parse::<ActivationKind>())
                .collect::<Result<_, _>>()
                .map_err(|e| ServiceError::Config(e.to_string()))?;
        }
        if let Some(v) = &self.step_sizes {
            grid.step_sizes = v.clone();
        }
        if let Some(v) = &self.epochs {
            grid.epochs = v.clone();
        }
        if let Some(v) = self.unit_min {
            grid.unit_min = v;
        }
        if let Some(v) = self.unit_max {
            grid.unit_max = v;
        }
        if let Some(v) = &self.hidden_layers {
            grid.hidden_layers = v.clone();
        }
        if let Some(v) = self.init_std {
            grid.init_std = v;
        }
        grid.validate().map_err(|e| ServiceError::Config(e.to_string()))?;
        Ok(grid)
    }
}
