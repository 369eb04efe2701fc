//! Per-contingency probability and cost parameters, and `contingencies.json`.

use std::path::Path;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RiskError;
use crate::grid::LineId;

/// Occurrence probabilities drawn from for randomized contingency sets.
pub const PROBABILITY_CHOICES: [f64; 4] = [0.00001, 0.00005, 0.0001, 0.0005];
/// Cost ratios drawn from for randomized contingency sets.
pub const COST_RATIO_CHOICES: [f64; 4] = [500.0 / 501.0, 1000.0 / 1001.0, 5000.0 / 5001.0, 10000.0 / 10001.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContingencyParams {
    pub line_id: LineId,
    pub p_c: f64,
    /// Cost of a missed alarm.
    pub c_f1: f64,
    /// Cost of a false alarm.
    pub c_f0: f64,
}

impl ContingencyParams {
    pub fn new(line_id: LineId, p_c: f64, c_f1: f64, c_f0: f64) -> Result<Self, RiskError> {
        if !(p_c > 0.0 && p_c < 1.0) {
            return Err(RiskError::InvalidProbability(p_c));
        }
        if !(c_f1 > 0.0 && c_f0 > 0.0 && c_f1.is_finite() && c_f0.is_finite()) {
            return Err(RiskError::NonPositiveCost);
        }
        Ok(Self {
            line_id,
            p_c,
            c_f1,
            c_f0,
        })
    }

    /// Costs `C^F1 = 𝒞`, `C^F0 = 1 − 𝒞`.
    pub fn from_cost_ratio(line_id: LineId, p_c: f64, ratio: f64) -> Result<Self, RiskError> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(RiskError::InvalidCostRatio(ratio));
        }
        Self::new(line_id, p_c, ratio, 1.0 - ratio)
    }

    pub fn cost_ratio(&self) -> f64 {
        self.c_f1 / (self.c_f1 + self.c_f0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PerturbTarget {
    Costs,
    Probabilities,
    #[default]
    Both,
}

impl PerturbTarget {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "costs" => Some(Self::Costs),
            "probabilities" => Some(Self::Probabilities),
            "both" => Some(Self::Both),
            _ => None,
        }
    }
}

/// Scales `C^F1` and/or `p^C` by `alpha`; the probability is clamped to `(0, 1 − 1e-9]`.
pub fn perturb_params(params: &ContingencyParams, alpha: f64, target: PerturbTarget) -> ContingencyParams {
    let mut out = *params;
    if matches!(target, PerturbTarget::Costs | PerturbTarget::Both) {
        out.c_f1 *= alpha;
    }
    if matches!(target, PerturbTarget::Probabilities | PerturbTarget::Both) {
        out.p_c = (out.p_c * alpha).clamp(f64::MIN_POSITIVE, 1.0 - 1e-9);
    }
    out
}

/// Seeded parameters for `lines`, each drawn from the choice sets above.
pub fn draw_params(lines: &[LineId], seed: u64) -> Vec<ContingencyParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    lines
        .iter()
        .map(|&line_id| {
            let p_c = *PROBABILITY_CHOICES.choose(&mut rng).expect("non-empty");
            let ratio = *COST_RATIO_CHOICES.choose(&mut rng).expect("non-empty");
            ContingencyParams::from_cost_ratio(line_id, p_c, ratio).expect("choices are valid")
        })
        .collect()
}

/// One `contingencies.json` entry: explicit costs or a cost ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamsSpec {
    Costs {
        line_id: LineId,
        p_c: f64,
        c_f1: f64,
        c_f0: f64,
    },
    Ratio {
        line_id: LineId,
        p_c: f64,
        cost_ratio: f64,
    },
}

impl ParamsSpec {
    pub fn resolve(&self) -> Result<ContingencyParams, RiskError> {
        match *self {
            ParamsSpec::Costs {
                line_id,
                p_c,
                c_f1,
                c_f0,
            } => ContingencyParams::new(line_id, p_c, c_f1, c_f0),
            ParamsSpec::Ratio {
                line_id,
                p_c,
                cost_ratio,
            } => ContingencyParams::from_cost_ratio(line_id, p_c, cost_ratio),
        }
    }
}

pub fn params_from_json(text: &str) -> Result<Vec<ContingencyParams>, RiskError> {
    let entries: Vec<ParamsSpec> = serde_json::from_str(text).map_err(|e| RiskError::MalformedFile(e.to_string()))?;
    entries.iter().map(ParamsSpec::resolve).collect()
}

pub fn params_to_json(params: &[ContingencyParams]) -> String {
    let entries: Vec<ParamsSpec> = params
        .iter()
        .map(|p| ParamsSpec::Costs {
            line_id: p.line_id,
            p_c: p.p_c,
            c_f1: p.c_f1,
            c_f0: p.c_f0,
        })
        .collect();
    serde_json::to_string_pretty(&entries).expect("params serialize")
}

pub fn load_params(path: &Path) -> Result<Vec<ContingencyParams>, RiskError> {
    let text = std::fs::read_to_string(path).map_err(|source| RiskError::Io {
        path: path.display().to_string(),
        source,
    })?;
    params_from_json(&text)
}
