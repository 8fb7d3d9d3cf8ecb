//! Versioned JSON model files.
//!
//! Layout:
//!
//! ```json
//! {
//!   "format": "difflstm-model",
//!   "version": 1,
//!   "hidden": 10, "input_dim": 1, "horizon": 10,
//!   "config": { ... },
//!   "tensors": [ { "name": "input_gate.input", "shape": [10, 1], "data": [ ... ] }, ... ]
//! }
//! ```
//!
//! Tensors appear in the order of [`TENSOR_NAMES`], each row-major. Floats are
//! written in shortest round-trip form, so a reload is bitwise exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::params::{ModelParams, TENSOR_NAMES};

pub const MODEL_FORMAT: &str = "difflstm-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: [usize; 2],
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    hidden: usize,
    input_dim: usize,
    horizon: usize,
    #[serde(default)]
    config: serde_json::Value,
    tensors: Vec<TensorRecord>,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

/// Parameters plus whatever configuration was echoed into the file.
#[derive(Clone, Debug, PartialEq)]
pub struct SavedModel {
    pub params: ModelParams,
    pub config: serde_json::Value,
}

pub fn model_to_string(params: &ModelParams, config: &serde_json::Value) -> Result<String> {
    if !params.is_finite() {
        return Err(Error::Numeric("model parameters to save".into()));
    }
    let tensors = params
        .tensors()
        .iter()
        .zip(params.tensor_shapes())
        .zip(TENSOR_NAMES)
        .map(|((t, (r, c)), name)| TensorRecord {
            name: name.to_string(),
            shape: [r, c],
            data: t.to_vec(),
        })
        .collect();
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        hidden: params.hidden,
        input_dim: params.input_dim,
        horizon: params.horizon,
        config: config.clone(),
        tensors,
    };
    let mut s = serde_json::to_string_pretty(&file).map_err(|e| Error::Corrupt(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_str(text: &str) -> Result<SavedModel> {
    let header: Header = serde_json::from_str(text).map_err(|e| Error::Corrupt(e.to_string()))?;
    if header.format != MODEL_FORMAT {
        return Err(Error::Corrupt(format!("not a model file (format {:?})", header.format)));
    }
    if header.version != MODEL_VERSION {
        return Err(Error::Version {
            found: header.version,
            supported: MODEL_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Corrupt(e.to_string()))?;
    if file.hidden == 0 || file.input_dim == 0 || file.horizon == 0 {
        return Err(Error::Corrupt("model dimensions must be positive".into()));
    }
    let mut params = ModelParams::zeros(file.hidden, file.input_dim, file.horizon);
    if file.tensors.len() != TENSOR_NAMES.len() {
        return Err(Error::Corrupt(format!(
            "expected {} tensors, found {}",
            TENSOR_NAMES.len(),
            file.tensors.len()
        )));
    }
    let shapes = params.tensor_shapes();
    for (k, (slot, rec)) in params.tensors_mut().into_iter().zip(&file.tensors).enumerate() {
        let (r, c) = shapes[k];
        if rec.name != TENSOR_NAMES[k] || rec.shape != [r, c] || rec.data.len() != r * c {
            return Err(Error::Corrupt(format!(
                "tensor {k}: expected {} {:?}, found {} {:?} with {} values",
                TENSOR_NAMES[k],
                [r, c],
                rec.name,
                rec.shape,
                rec.data.len()
            )));
        }
        slot.copy_from_slice(&rec.data);
    }
    Ok(SavedModel {
        params,
        config: file.config,
    })
}

pub fn save_model(path: impl AsRef<Path>, params: &ModelParams, config: &serde_json::Value) -> Result<()> {
    let path = path.as_ref();
    let text = model_to_string(params, config)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}
