//! Feedforward network trained by online backpropagation on the squared
//! error energy.

mod activation;
mod network;
mod train;

pub use activation::{activation_eval, ActivationKind};
pub use network::{
    backprop_gradients, error_energy, format_topology, forward, init_weights, one_hot, parse_topology, ForwardPass,
    LayerWeights, NetworkModel, WeightSet,
};
pub use train::{nn_predict, train, train_patterns, TrainConfig, TrainOutcome};
