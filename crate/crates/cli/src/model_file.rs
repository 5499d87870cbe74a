//! Scorer model files: a single JSON document with a header (format
//! version, dims, activation, seed, training-config echo, float encoding)
//! and per-layer flat weight/bias arrays in row-major order. Decimal
//! encoding uses shortest round-trip floats, so save/load is bit-exact.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mcd_core::sampler::{Activation, SamplerModel};

use crate::error::{CliError, Result};

pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LayerJson {
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    format_version: u32,
    layer_dims: Vec<usize>,
    activation: String,
    /// Training seed (0 when the model was never trained).
    seed: u64,
    /// "decimal" (shortest round-trip) is the only encoding written.
    encoding: String,
    train_config: BTreeMap<String, String>,
    layers: Vec<LayerJson>,
}

pub fn write_model(
    path: &Path,
    model: &SamplerModel,
    seed: u64,
    train_config: BTreeMap<String, String>,
) -> Result<()> {
    let doc = ModelJson {
        format_version: MODEL_FILE_VERSION,
        layer_dims: model.layer_dims.clone(),
        activation: model.activation.name().to_string(),
        seed,
        encoding: "decimal".to_string(),
        train_config,
        layers: model
            .weights
            .iter()
            .zip(&model.biases)
            .map(|(w, b)| LayerJson { weights: w.clone(), biases: b.clone() })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&doc).expect("model serializes");
    std::fs::write(path, text)
        .map_err(|e| CliError::data(format!("cannot write {path:?}: {e}")))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<SamplerModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot open {path:?}: {e}")))?;
    let doc: ModelJson = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("bad model file: {e}")))?;
    if doc.format_version != MODEL_FILE_VERSION {
        return Err(CliError::data(format!(
            "unsupported model format_version {}",
            doc.format_version
        )));
    }
    if doc.encoding != "decimal" {
        return Err(CliError::data(format!("unsupported encoding {:?}", doc.encoding)));
    }
    let activation = Activation::from_name(&doc.activation)
        .ok_or_else(|| CliError::data(format!("unknown activation {:?}", doc.activation)))?;
    let model = SamplerModel {
        layer_dims: doc.layer_dims,
        weights: doc.layers.iter().map(|l| l.weights.clone()).collect(),
        biases: doc.layers.iter().map(|l| l.biases.clone()).collect(),
        activation,
        version: doc.format_version,
    };
    model
        .validate()
        .map_err(|e| CliError::data(format!("inconsistent model file: {e}")))?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = SamplerModel::init(&[4, 16, 8, 1], 42).unwrap();
        write_model(&path, &model, 42, BTreeMap::new()).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn parameter_count_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = SamplerModel::init(&[4, 4, 1], 1).unwrap();
        write_model(&path, &model, 1, BTreeMap::new()).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replacen("\"layer_dims\": [\n    4,\n    4,", "\"layer_dims\": [\n    4,\n    5,", 1);
        std::fs::write(&path, text).unwrap();
        assert!(read_model(&path).is_err());
    }
}
