//! Sample ingestion, threshold-triggered retraining with versioned model
//! records, and remote prediction over HTTP.

pub mod cli;
pub mod config;
pub mod error;
pub mod http;
pub mod record;
pub mod registry;
pub mod report;
pub mod service;
pub mod store;
pub mod training;

pub use error::{FieldError, ServiceError, ServiceResult};
pub use record::ModelRecord;
pub use service::{AccuService, Clock, FixedClock, ServiceConfig, SystemClock};
