//! Risk arithmetic for cost-sensitive predictions and budgeted triage of
//! (condition, contingency) scenarios.

mod curves;
mod decision;
mod params;
mod triage;

pub use curves::{
    budget_sweep, evaluate_z, no_ml_order, read_curve_csv, residual_curve, standard_classifier_order, write_curve_csv,
    zero_error_budget, CurvePoint, OrderedPrediction,
};
pub use decision::{
    adjusted_priors, cost_ratio, decision_threshold, ml_severity, prediction_risks, risk_optimal_predict,
};
pub use params::{
    draw_params, load_params, params_from_json, params_to_json, perturb_params, ContingencyParams, ParamsSpec,
    PerturbTarget, COST_RATIO_CHOICES, PROBABILITY_CHOICES,
};
pub use triage::{
    rank_from_probabilities, rank_scenarios, read_triage_csv, sort_by_risk, triage, uniform_condition_probabilities,
    write_triage_csv, Assessment, ContingencyOutcome, ProbabilityModel, Scenario, TriageReport, TriageRow,
};

use crate::grid::LineId;

#[derive(Debug, thiserror::Error)]
pub enum RiskError {
    #[error("costs must be positive and finite")]
    NonPositiveCost,
    #[error("probability {0} is outside (0, 1)")]
    InvalidProbability(f64),
    #[error("cost ratio {0} is outside (0, 1)")]
    InvalidCostRatio(f64),
    #[error("no training examples")]
    EmptyDatabase,
    #[error("no model or parameters for contingency {0}")]
    MissingModel(LineId),
    #[error("condition probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("malformed file: {0}")]
    MalformedFile(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
