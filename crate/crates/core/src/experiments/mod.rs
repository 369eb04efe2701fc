//! Seeded, configuration-driven study runners writing CSV outputs and a
//! `manifest.json` into their own output directory.

mod config;
mod pipeline;
mod studies;
mod triage_studies;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use config::{
    CalibrationSettings, ExperimentConfig, ExperimentKind, LearnerSettings, ParamsSource, PerturbScope,
    SensitivitySettings, THRESHOLD_COST_RATIOS,
};
pub use pipeline::{
    oracle_label, read_rows, repetition_database, repetition_seed, secure_priors, stored_label, test_conditions,
    train_all, train_calibrated, write_rows, ContingencyModel,
};
pub use studies::{
    run_calibration_study, run_imbalance_study, run_threshold_study, BrierRow, ImbalanceRow, ThresholdRow,
    THRESHOLD_VARIANTS,
};
pub use triage_studies::{
    run_multi_contingency_study, run_sensitivity_study, run_triage_study, sensitivity_variants, SensitivityVariant,
};

use crate::calibration::CalibrationError;
use crate::grid::{GridError, GridModel};
use crate::learner::LearnerError;
use crate::risk_engine::RiskError;
use crate::scenario_gen::{build_database, save_database, GenerationConfig, LabeledDatabase, ScenarioError};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error("{path}: {message}")]
    Output { path: String, message: String },
}

impl ExperimentError {
    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        ExperimentError::Output {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    fn csv(path: &Path, e: csv::Error) -> Self {
        Self::io(path, e)
    }
}

pub const VERSION_TAG: &str = concat!("riskgate-", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub config_hash: String,
    pub version: String,
    /// Training-split secure prior π¹ per line.
    pub priors: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
}

impl Manifest {
    pub(crate) fn new(
        config: &ExperimentConfig,
        db: &LabeledDatabase,
        outputs: Vec<String>,
        summary: serde_json::Value,
    ) -> Result<Self, ExperimentError> {
        let priors = secure_priors(db, &config.lines)?
            .into_iter()
            .map(|(l, p)| (l.to_string(), p))
            .collect();
        Ok(Self {
            experiment: config.experiment,
            seed: config.seed,
            config_hash: config.hash(),
            version: VERSION_TAG.to_string(),
            priors,
            outputs,
            summary,
        })
    }

    pub(crate) fn write(&self, out_dir: &Path) -> Result<(), ExperimentError> {
        let path = out_dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| ExperimentError::io(&path, e))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| ExperimentError::io(path, e))
    }
}

/// Samples and labels the condition pool for `config`.
pub fn prepare_database(grid: &GridModel, config: &ExperimentConfig) -> Result<LabeledDatabase, ExperimentError> {
    config.validate(grid)?;
    let mut gen = GenerationConfig::new(config.seed, config.splits, config.lines.clone());
    gen.corrective_range_mw = config.corrective_range_mw;
    Ok(build_database(grid, &gen)?)
}

pub(crate) fn ensure_dir(out_dir: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(out_dir).map_err(|e| ExperimentError::io(out_dir, e))
}

/// Runs the study named by `config.experiment` on `db`.
pub fn run_on_database(
    grid: &GridModel,
    config: &ExperimentConfig,
    db: &LabeledDatabase,
    out_dir: &Path,
) -> Result<Manifest, ExperimentError> {
    config.validate(grid)?;
    for &l in &config.lines {
        db.contingency_index(l)?;
    }
    ensure_dir(out_dir)?;
    match config.experiment {
        ExperimentKind::Imbalance => run_imbalance_study(config, db, out_dir),
        ExperimentKind::Calibration => run_calibration_study(config, db, out_dir),
        ExperimentKind::Threshold => run_threshold_study(config, db, out_dir),
        ExperimentKind::Triage => run_triage_study(grid, config, db, out_dir),
        ExperimentKind::Multi => run_multi_contingency_study(grid, config, db, out_dir),
        ExperimentKind::Sensitivity => run_sensitivity_study(config, db, out_dir),
    }
}

/// Generates the database, saves it as `dataset.csv` and runs the study.
pub fn run_experiment(
    grid: &GridModel,
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<Manifest, ExperimentError> {
    let db = prepare_database(grid, config)?;
    ensure_dir(out_dir)?;
    save_database(&db, &out_dir.join("dataset.csv"))?;
    let mut manifest = run_on_database(grid, config, &db, out_dir)?;
    manifest.outputs.insert(0, "dataset.csv".into());
    manifest.write(out_dir)?;
    Ok(manifest)
}

pub(crate) fn out_path(out_dir: &Path, name: &str) -> PathBuf {
    out_dir.join(name)
}
