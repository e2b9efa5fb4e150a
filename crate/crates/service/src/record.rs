//! The persisted model record and its JSON encoding.
//!
//! Records are pretty-printed JSON. Every float is written in scientific
//! notation with 17 significant digits, which is enough to read back the
//! exact same `f64`.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use accu_core::evaluation::MetricsReport;
use accu_core::honn::HyperGrid;
use accu_core::model::{ModelKind, TrainedModel};
use accu_core::neural::ActivationKind;
use accu_core::NormalizationParams;
use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::error::{ServiceError, ServiceResult};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct ModelRecord {
    pub format_version: u32,
    pub version: u64,
    /// RFC 3339 UTC timestamp.
    pub created_at: String,
    pub kind: ModelKind,
    pub model: TrainedModel,
    pub normalization: NormalizationParams,
    pub metadata: TrainingMetadata,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct TrainingMetadata {
    /// Samples in the snapshot the model was built from.
    pub dataset_size: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub seed: u64,
    /// SHA-256 of the grid configuration, for grid-searched models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_hash: Option<String>,
    /// File name of the search log, relative to the record's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_log: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperparameters: Option<Hyperparameters>,
    /// Scores of the final model on the held-out part of the snapshot.
    pub holdout_metrics: MetricsReport,
}

/// Winning grid point of a search.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct Hyperparameters {
    pub activation: ActivationKind,
    pub rho: f64,
    pub epochs: usize,
    pub topology: String,
}

impl ModelRecord {
    pub fn validate(&self) -> ServiceResult<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(ServiceError::Record(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        self.model.validate()?;
        self.normalization.validate()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    pub fn from_json(text: &str) -> ServiceResult<Self> {
        let record: ModelRecord = serde_json::from_str(text).map_err(|e| ServiceError::Record(e.to_string()))?;
        record.validate()?;
        Ok(record)
    }

    pub fn load(path: &Path) -> ServiceResult<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| ServiceError::Record(format!("{}: {e}", path.display())))
    }

    /// Writes to a temporary sibling first and renames it into place, so
    /// readers never observe a half-written file.
    pub fn save(&self, path: &Path) -> ServiceResult<()> {
        write_atomically(path, self.to_json().as_bytes())
    }
}

pub(crate) fn write_atomically(path: &Path, bytes: &[u8]) -> ServiceResult<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Hex SHA-256 of the grid's canonical JSON encoding.
pub fn grid_hash(grid: &HyperGrid) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision::compact());
    grid.serialize(&mut ser).expect("grid serializes");
    hex::encode(Sha256::digest(&buf))
}

/// Pretty JSON with 17-significant-digit floats and a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision::pretty());
    value.serialize(&mut ser).expect("in-memory serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// JSON formatter that writes floats as `d.dddddddddddddddde±x`.
struct FullPrecision {
    pretty: Option<PrettyFormatter<'static>>,
}

impl FullPrecision {
    fn pretty() -> Self {
        Self { pretty: Some(PrettyFormatter::new()) }
    }

    fn compact() -> Self {
        Self { pretty: None }
    }
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                match &mut self.pretty {
                    Some(p) => p.$name(writer $(, $arg)*),
                    None => serde_json::ser::CompactFormatter.$name(writer $(, $arg)*),
                }
            }
        )*
    };
}

impl Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}
