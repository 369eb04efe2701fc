//! Experiment configuration with per-study defaults.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentError;
use crate::calibration::DEFAULT_BINS;
use crate::grid::{GridModel, LineId, CORRECTIVE_RANGE_MW};
use crate::learner::BoostMode;
use crate::risk_engine::{draw_params, ContingencyParams, ParamsSpec, PerturbTarget};
use crate::scenario_gen::SplitSizes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Imbalance,
    Calibration,
    Threshold,
    Triage,
    Multi,
    Sensitivity,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Imbalance,
        ExperimentKind::Calibration,
        ExperimentKind::Threshold,
        ExperimentKind::Triage,
        ExperimentKind::Multi,
        ExperimentKind::Sensitivity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Imbalance => "imbalance",
            ExperimentKind::Calibration => "calibration",
            ExperimentKind::Threshold => "threshold",
            ExperimentKind::Triage => "triage",
            ExperimentKind::Multi => "multi",
            ExperimentKind::Sensitivity => "sensitivity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// Where contingency parameters come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamsSource {
    Explicit(Vec<ParamsSpec>),
    Drawn { draw_seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerSettings {
    pub rounds: usize,
    pub mode: BoostMode,
    pub k_folds: usize,
    pub max_tree_depth: usize,
}

impl Default for LearnerSettings {
    fn default() -> Self {
        Self {
            rounds: 100,
            mode: BoostMode::SammeR,
            k_folds: 3,
            max_tree_depth: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSettings {
    pub bins: usize,
    /// Pooled out-of-fold fitting on the training split instead of the hold-out split.
    pub k_folds: Option<usize>,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            k_folds: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PerturbScope {
    #[default]
    All,
    /// One contingency picked by the run seed.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySettings {
    pub alpha: f64,
    pub target: PerturbTarget,
    pub scope: PerturbScope,
}

impl Default for SensitivitySettings {
    fn default() -> Self {
        Self {
            alpha: 10.0,
            target: PerturbTarget::Both,
            scope: PerturbScope::All,
        }
    }
}

/// Decision-threshold study cost-ratio grid.
pub const THRESHOLD_COST_RATIOS: [f64; 7] = [
    2.0 / 3.0,
    5.0 / 6.0,
    10.0 / 11.0,
    50.0 / 51.0,
    100.0 / 101.0,
    500.0 / 501.0,
    1000.0 / 1001.0,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub splits: SplitSizes,
    /// Line outages labeled and studied, in order.
    pub lines: Vec<LineId>,
    pub params: ParamsSource,
    pub learner: LearnerSettings,
    pub calibration: CalibrationSettings,
    pub sensitivity: SensitivitySettings,
    pub repetitions: usize,
    pub cost_ratios: Vec<f64>,
    /// Budget sweep; `None` uses the default granularity.
    pub budgets: Option<Vec<usize>>,
    /// Budget of the exported triage report; `None` uses the zero-error budget.
    pub triage_budget: Option<usize>,
    pub corrective_range_mw: f64,
}

impl ExperimentConfig {
    pub fn for_kind(kind: ExperimentKind) -> Self {
        let all_lines: Vec<LineId> = (1..=11).collect();
        let (lines, params) = match kind {
            // imbalanced first, balanced second
            ExperimentKind::Imbalance => (vec![6, 5], ParamsSource::Drawn { draw_seed: 1 }),
            ExperimentKind::Calibration | ExperimentKind::Threshold => (vec![6], ParamsSource::Drawn { draw_seed: 1 }),
            ExperimentKind::Triage => (
                vec![3],
                ParamsSource::Explicit(vec![ParamsSpec::Ratio {
                    line_id: 3,
                    p_c: 0.0002,
                    cost_ratio: 10000.0 / 10001.0,
                }]),
            ),
            ExperimentKind::Multi => (vec![3, 5], ParamsSource::Drawn { draw_seed: 46 }),
            ExperimentKind::Sensitivity => (all_lines, ParamsSource::Drawn { draw_seed: 47 }),
        };
        Self {
            experiment: kind,
            seed: 2024,
            splits: SplitSizes {
                train: 3500,
                calib: 875,
                test: 1500,
            },
            lines,
            params,
            learner: LearnerSettings::default(),
            calibration: CalibrationSettings::default(),
            sensitivity: SensitivitySettings::default(),
            repetitions: 10,
            cost_ratios: THRESHOLD_COST_RATIOS.to_vec(),
            budgets: None,
            triage_budget: None,
            corrective_range_mw: CORRECTIVE_RANGE_MW,
        }
    }

    /// Parses a config file; keys absent from it take the defaults of its
    /// `experiment` kind. Nested objects are merged one level deep.
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let user: serde_json::Value = serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        let obj = user
            .as_object()
            .ok_or_else(|| ExperimentError::Config("config must be a JSON object".into()))?;
        let kind_name = obj
            .get("experiment")
            .and_then(|v| v.as_str())
            .ok_or_else(|| ExperimentError::Config("missing `experiment`".into()))?;
        let kind = ExperimentKind::parse(kind_name)
            .ok_or_else(|| ExperimentError::Config(format!("unknown experiment `{kind_name}`")))?;
        Self::for_kind(kind).merged(&user)
    }

    /// Copy with the keys of `overrides` applied.
    pub fn merged(&self, overrides: &serde_json::Value) -> Result<Self, ExperimentError> {
        let mut base = serde_json::to_value(self).expect("config serializes");
        let (Some(target), Some(src)) = (base.as_object_mut(), overrides.as_object()) else {
            return Err(ExperimentError::Config("config must be a JSON object".into()));
        };
        for (key, value) in src {
            if !target.contains_key(key) {
                return Err(ExperimentError::Config(format!("unknown key `{key}`")));
            }
            match (target.get_mut(key).and_then(|v| v.as_object_mut()), value.as_object()) {
                (Some(inner), Some(sub)) => {
                    for (k, v) in sub {
                        inner.insert(k.clone(), v.clone());
                    }
                }
                _ => {
                    target.insert(key.clone(), value.clone());
                }
            }
        }
        let config: Self = serde_json::from_value(base).map_err(|e| ExperimentError::Config(e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ExperimentError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn validate(&self, grid: &GridModel) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.lines.is_empty() {
            return bad("at least one line is required".into());
        }
        for &l in &self.lines {
            if grid.line(l).is_err() {
                return bad(format!("line {l} does not exist in the network"));
            }
        }
        let mut sorted = self.lines.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.lines.len() {
            return bad("lines must be distinct".into());
        }
        if self.splits.train == 0 || self.splits.test == 0 {
            return bad("train and test splits must be non-empty".into());
        }
        if self.calibration.k_folds.is_none() && self.splits.calib == 0 {
            return bad("hold-out calibration needs a non-empty calib split".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.learner.rounds == 0 || self.learner.k_folds < 2 {
            return bad("learner needs rounds >= 1 and k_folds >= 2".into());
        }
        if self.calibration.bins == 0 || self.calibration.bins > self.splits.test {
            return bad("bins must be in 1..=test size".into());
        }
        if !(self.sensitivity.alpha > 0.0) {
            return bad("alpha must be positive".into());
        }
        if self.cost_ratios.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return bad("cost ratios must lie in (0, 1)".into());
        }
        if self.experiment == ExperimentKind::Imbalance && self.lines.len() != 2 {
            return bad("the imbalance study takes exactly two lines (imbalanced, balanced)".into());
        }
        self.resolve_params()?;
        Ok(())
    }

    /// Parameters aligned with `lines`.
    pub fn resolve_params(&self) -> Result<Vec<ContingencyParams>, ExperimentError> {
        match &self.params {
            ParamsSource::Drawn { draw_seed } => Ok(draw_params(&self.lines, *draw_seed)),
            ParamsSource::Explicit(specs) => {
                let resolved = specs
                    .iter()
                    .map(|s| s.resolve().map_err(|e| ExperimentError::Config(e.to_string())))
                    .collect::<Result<Vec<_>, _>>()?;
                self.lines
                    .iter()
                    .map(|&l| {
                        resolved
                            .iter()
                            .find(|p| p.line_id == l)
                            .copied()
                            .ok_or_else(|| ExperimentError::Config(format!("no parameters for line {l}")))
                    })
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_takes_kind_defaults() {
        let c =
            ExperimentConfig::from_json(r#"{"experiment": "triage", "seed": 9, "learner": {"rounds": 5}}"#).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.learner.rounds, 5);
        assert_eq!(c.learner.k_folds, 3);
        assert_eq!(c.lines, vec![3]);
        let p = c.resolve_params().unwrap();
        assert_eq!(p[0].p_c, 0.0002);
        c.validate(&GridModel::case6ww()).unwrap();
    }

    #[test]
    fn config_errors() {
        assert!(ExperimentConfig::from_json("{}").is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment": "nope"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment": "multi", "colour": 1}"#).is_err());
        let c = ExperimentConfig::from_json(r#"{"experiment": "multi", "lines": [3, 42]}"#).unwrap();
        assert!(c.validate(&GridModel::case6ww()).is_err());
        let c = ExperimentConfig::from_json(r#"{"experiment": "imbalance", "lines": [6]}"#).unwrap();
        assert!(c.validate(&GridModel::case6ww()).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::for_kind(ExperimentKind::Multi);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        assert_eq!(ExperimentConfig::from_json(&a.to_json()).unwrap(), a);
    }
}
