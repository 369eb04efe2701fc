//! Training, calibration and scoring steps shared by the runners.

use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{ExperimentConfig, ExperimentError};
use crate::calibration::{fit_platt, fit_platt_cross_validated, CalibratedEnsemble, PlattParams};
use crate::grid::{assess_security, GridModel, LineId, PreFaultCondition, SecurityLabel};
use crate::learner::{train_adaboost, BoostConfig, CvReport, Ensemble};
use crate::scenario_gen::{LabeledDatabase, Split};

/// Seed of repetition `r` derived from the run seed.
pub fn repetition_seed(seed: u64, r: usize) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(r as u64 + 1)
}

/// Database for repetition `r`: the original split for `r = 0`, a seeded re-split otherwise.
pub fn repetition_database(db: &LabeledDatabase, seed: u64, r: usize) -> LabeledDatabase {
    if r == 0 {
        db.clone()
    } else {
        db.resplit(repetition_seed(seed, r))
    }
}

#[derive(Debug, Clone)]
pub struct ContingencyModel {
    pub line_id: LineId,
    pub ensemble: Ensemble,
    pub cv: CvReport,
    pub platt: PlattParams,
}

impl ContingencyModel {
    pub fn calibrated(&self) -> CalibratedEnsemble {
        CalibratedEnsemble {
            ensemble: self.ensemble.clone(),
            platt: Some(self.platt),
        }
    }
}

pub fn boost_config(config: &ExperimentConfig) -> BoostConfig {
    BoostConfig {
        rounds: config.learner.rounds,
        mode: config.learner.mode,
        k_folds: config.learner.k_folds,
    }
}

/// Boosts on the training split and fits the sigmoid on the calibration
/// split (or on pooled out-of-fold training scores when configured).
pub fn train_calibrated(
    db: &LabeledDatabase,
    line: LineId,
    config: &ExperimentConfig,
) -> Result<ContingencyModel, ExperimentError> {
    let (x, y) = db.split_data(Split::Train, line)?;
    let (ensemble, cv) = train_adaboost(&x, &y, &boost_config(config))?;
    let platt = match config.calibration.k_folds {
        Some(k) => fit_platt_cross_validated(&x, &y, cv.selected_rounds, config.learner.mode, k)?,
        None => {
            let (xc, yc) = db.split_data(Split::Calib, line)?;
            let scores: Vec<f64> = xc.iter().map(|v| ensemble.score(v)).collect();
            fit_platt(&scores, &yc)?
        }
    };
    Ok(ContingencyModel {
        line_id: line,
        ensemble,
        cv,
        platt,
    })
}

pub fn train_all(
    db: &LabeledDatabase,
    lines: &[LineId],
    config: &ExperimentConfig,
) -> Result<Vec<ContingencyModel>, ExperimentError> {
    lines.par_iter().map(|&l| train_calibrated(db, l, config)).collect()
}

/// Test-split condition ids and feature rows.
pub fn test_conditions(db: &LabeledDatabase) -> (Vec<u64>, Vec<Vec<f64>>) {
    db.conditions
        .iter()
        .filter(|c| c.split == Split::Test)
        .map(|c| (c.id, c.features()))
        .unzip()
}

/// Stored label of condition `id` under `line`.
pub fn stored_label(db: &LabeledDatabase, id: u64, line: LineId) -> SecurityLabel {
    let k = db.contingency_index(line).expect("line is labeled");
    db.conditions[id as usize].labels[k]
}

/// Recomputes the label of condition `id` under `line` with the grid oracle.
pub fn oracle_label(
    grid: &GridModel,
    db: &LabeledDatabase,
    id: u64,
    line: LineId,
    corrective_range: f64,
) -> Result<SecurityLabel, ExperimentError> {
    let c = &db.conditions[id as usize];
    let cond = PreFaultCondition {
        loads_mw: grid.expand_loads(&c.loads_mw)?,
        dispatch_mw: c.dispatch_mw.clone(),
    };
    Ok(assess_security(grid, &cond, line, corrective_range)?)
}

/// Training-split secure prior per line.
pub fn secure_priors(db: &LabeledDatabase, lines: &[LineId]) -> Result<Vec<(LineId, f64)>, ExperimentError> {
    lines
        .iter()
        .map(|&l| Ok((l, db.class_counts(Split::Train, l)?.priors().1)))
        .collect()
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| ExperimentError::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| ExperimentError::csv(path, e))?;
    }
    w.flush().map_err(|e| ExperimentError::io(path, e))
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ExperimentError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| ExperimentError::csv(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| ExperimentError::csv(path, e)))
        .collect()
}
