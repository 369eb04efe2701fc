//! `model.json` persistence.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adaboost::{BoostMode, Ensemble};
use super::stump::Stump;
use super::LearnerError;
use crate::grid::LineId;

pub const MODEL_VERSION: &str = "riskgate-model/1";

/// Sigmoid parameters stored alongside a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoredCalibration {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: String,
    pub mode: BoostMode,
    pub contingency: LineId,
    pub stumps: Vec<Stump>,
    pub weights: Vec<f64>,
    pub calibration: Option<StoredCalibration>,
}

impl ModelFile {
    pub fn new(contingency: LineId, ensemble: &Ensemble, calibration: Option<StoredCalibration>) -> Self {
        Self {
            version: MODEL_VERSION.to_string(),
            mode: ensemble.mode,
            contingency,
            stumps: ensemble.stumps.clone(),
            weights: ensemble.weights.clone(),
            calibration,
        }
    }

    pub fn ensemble(&self) -> Ensemble {
        Ensemble {
            mode: self.mode,
            stumps: self.stumps.clone(),
            weights: self.weights.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LearnerError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| LearnerError::MalformedFile(e.to_string()))?;
        match value.get("version").and_then(|v| v.as_str()) {
            Some(MODEL_VERSION) => {}
            Some(other) => return Err(LearnerError::VersionMismatch(other.to_string())),
            None => return Err(LearnerError::MalformedFile("missing `version`".into())),
        }
        let model: ModelFile = serde_json::from_value(value).map_err(|e| LearnerError::MalformedFile(e.to_string()))?;
        if model.stumps.is_empty() || model.stumps.len() != model.weights.len() {
            return Err(LearnerError::MalformedFile(
                "stumps and weights must be non-empty and aligned".into(),
            ));
        }
        if model.weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(LearnerError::MalformedFile(
                "weights must be finite and non-negative".into(),
            ));
        }
        Ok(model)
    }
}

pub fn save_model(model: &ModelFile, path: &Path) -> Result<(), LearnerError> {
    std::fs::write(path, model.to_json()).map_err(|source| LearnerError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<ModelFile, LearnerError> {
    let text = std::fs::read_to_string(path).map_err(|source| LearnerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ModelFile::from_json(&text)
}
