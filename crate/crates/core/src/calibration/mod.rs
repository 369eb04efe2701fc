//! Sigmoid calibration of ensemble scores and binned reliability measures.

mod brier;
mod platt;

pub use brier::{brier_score, read_reliability_csv, write_reliability_csv, ReliabilityBin, ReliabilityBins};
pub use platt::{
    calibrated_probability, fit_platt, fit_platt_cross_validated, platt_targets, PlattParams, NEWTON_MAX_ITER,
    NEWTON_STEP_TOL,
};

/// Default bin count for reliability measures.
pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum CalibrationError {
    #[error("calibration data contains a single class")]
    SingleClassCalibration,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Learner(#[from] crate::learner::LearnerError),
}

/// Ensemble with an optional sigmoid on top of its score.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CalibratedEnsemble {
    pub ensemble: crate::learner::Ensemble,
    pub platt: Option<PlattParams>,
}

impl CalibratedEnsemble {
    /// `p̂¹(x)`, or the raw score `s¹(x)` when uncalibrated.
    pub fn probability(&self, x: &[f64]) -> f64 {
        let s = self.ensemble.score(x);
        match &self.platt {
            Some(p) => calibrated_probability(p, s),
            None => s,
        }
    }
}
