//! JSON model container with a format version and a layout checksum.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::params::{cascade_names, CASCADE};
use super::{FieldModel, ParamModel};
use crate::rng::stable_hash;
use crate::statistics::feature_names;

pub const FORMAT_VERSION: u32 = 1;
const FORMAT_TAG: &str = "atpe-param-model";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt model file: {0}")]
    Corrupt(#[from] serde_json::Error),
    #[error("not a parameter model file (format tag `{0}`)")]
    WrongFormat(String),
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("model input layout checksum {found} does not match {expected}")]
    LayoutMismatch { found: String, expected: String },
    #[error("model holds {found} field models, expected {expected}")]
    FieldCount { found: usize, expected: usize },
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    layout_checksum: String,
    fields: Vec<NamedField>,
}

#[derive(Serialize, Deserialize)]
struct NamedField {
    name: String,
    model: FieldModel,
}

/// Hash of the feature manifest and the cascade order.
pub fn layout_checksum() -> String {
    layout_checksum_for(&cascade_names())
}

/// Checksum for an arbitrary field order.
pub fn layout_checksum_for(cascade: &[&str]) -> String {
    let features = feature_names();
    let mut parts: Vec<&str> = features.iter().map(String::as_str).collect();
    parts.push("|");
    parts.extend_from_slice(cascade);
    format!("{:016x}", stable_hash(&parts))
}

pub fn save_model(model: &ParamModel, path: &Path) -> Result<(), ModelError> {
    let doc = ModelDocument {
        format: FORMAT_TAG.to_string(),
        version: FORMAT_VERSION,
        layout_checksum: layout_checksum(),
        fields: CASCADE
            .iter()
            .zip(&model.fields)
            .map(|(f, m)| NamedField {
                name: f.name().to_string(),
                model: m.clone(),
            })
            .collect(),
    };
    std::fs::write(path, serde_json::to_string(&doc)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ParamModel, ModelError> {
    let text = std::fs::read_to_string(path)?;
    let header: serde_json::Value = serde_json::from_str(&text)?;
    let tag = header.get("format").and_then(|v| v.as_str()).unwrap_or_default();
    if tag != FORMAT_TAG {
        return Err(ModelError::WrongFormat(tag.to_string()));
    }
    let version = header.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != FORMAT_VERSION {
        return Err(ModelError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let doc: ModelDocument = serde_json::from_value(header)?;
    let expected = layout_checksum();
    if doc.layout_checksum != expected {
        return Err(ModelError::LayoutMismatch {
            found: doc.layout_checksum,
            expected,
        });
    }
    if doc.fields.len() != CASCADE.len() {
        return Err(ModelError::FieldCount {
            found: doc.fields.len(),
            expected: CASCADE.len(),
        });
    }
    Ok(ParamModel {
        fields: doc.fields.into_iter().map(|f| f.model).collect(),
    })
}
