use crate::data::OcdClass;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("class {0} is absent from the training data")]
    MissingClass(OcdClass),

    #[error("class {class} has {count} samples, at least {required} required")]
    TooFewSamples {
        class: OcdClass,
        count: usize,
        required: usize,
    },

    #[error("pooled variance of feature {feature} is zero")]
    ZeroVariance { feature: usize },

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },

    #[error("gradient ascent diverged at iteration {iteration}")]
    LogisticDiverged { iteration: usize },

    #[error("network training produced non-finite weights at epoch {epoch}, sample {sample}")]
    NetworkDiverged { epoch: usize, sample: usize },

    #[error("every grid candidate failed to train")]
    SearchFailed,

    #[error("round {round}: {message}")]
    Round { round: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
