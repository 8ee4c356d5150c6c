//! Versioned model files (`.qsm`): pretty-printed JSON with fields in a
//! fixed order and floats in shortest round-trip form, so equal models give
//! equal bytes.
//!
//! Loading checks `format_version` before anything else, then decodes the
//! payload and re-validates every structural invariant of the model. Any
//! failure returns an error and no model.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::learners::{Kind, TrainedModel};

pub const FORMAT_VERSION: u64 = 1;
pub const MODEL_EXTENSION: &str = "qsm";

#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model file: {0}")]
    Syntax(String),
    #[error("model file has no format_version field")]
    MissingVersion,
    #[error("unsupported format_version {found}; this build reads version {FORMAT_VERSION}")]
    Version { found: serde_json::Value },
    #[error("invalid field `{path}`: {message}")]
    Field { path: String, message: String },
    #[error("model kind field says {declared} but the payload is {actual}")]
    KindMismatch { declared: Kind, actual: Kind },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("refusing to save: {0}")]
    Unsaveable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u64,
    pub kind: Kind,
    /// Name and version of the writing program.
    pub creator: String,
    /// Rows the model was fitted on.
    pub n_train: usize,
    pub seed: u64,
    /// Full effective configuration and fitted parameters.
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(model: TrainedModel, n_train: usize, seed: u64) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind: model.kind(),
            creator: format!("qoeshift {}", env!("CARGO_PKG_VERSION")),
            n_train,
            seed,
            model,
        }
    }
}

/// Canonical bytes of `file`. Non-finite or structurally broken models are
/// refused.
pub fn to_bytes(file: &ModelFile) -> Result<Vec<u8>, PersistError> {
    file.model.validate().map_err(PersistError::Unsaveable)?;
    if file.kind != file.model.kind() {
        return Err(PersistError::KindMismatch {
            declared: file.kind,
            actual: file.model.kind(),
        });
    }
    let mut bytes = serde_json::to_vec_pretty(file).map_err(|e| PersistError::Unsaveable(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes `file` to `sink`; returns the number of bytes written.
pub fn save<W: Write>(file: &ModelFile, mut sink: W) -> Result<usize, PersistError> {
    let bytes = to_bytes(file)?;
    sink.write_all(&bytes)?;
    sink.flush()?;
    Ok(bytes.len())
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelFile, PersistError> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| PersistError::Syntax(e.to_string()))?;
    match value.get("format_version") {
        None => return Err(PersistError::MissingVersion),
        Some(v) if v.as_u64() == Some(FORMAT_VERSION) => {}
        Some(v) => return Err(PersistError::Version { found: v.clone() }),
    }
    let file: ModelFile = serde_path_to_error::deserialize(value).map_err(|e| PersistError::Field {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    if file.kind != file.model.kind() {
        return Err(PersistError::KindMismatch {
            declared: file.kind,
            actual: file.model.kind(),
        });
    }
    file.model.validate().map_err(PersistError::Invalid)?;
    Ok(file)
}

pub fn load<R: Read>(mut source: R) -> Result<ModelFile, PersistError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}

/// Writes through a temporary sibling and renames, so a failed save never
/// leaves a truncated model behind.
pub fn save_path(file: &ModelFile, path: &Path) -> Result<usize, PersistError> {
    let bytes = to_bytes(file)?;
    let tmp = path.with_extension("qsm.tmp");
    fs::write(&tmp, &bytes)?;
    fs::rename(&tmp, path)?;
    Ok(bytes.len())
}

pub fn load_path(path: &Path) -> Result<ModelFile, PersistError> {
    from_bytes(&fs::read(path)?)
}
