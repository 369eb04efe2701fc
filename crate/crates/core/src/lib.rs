//! Calibrated, cost-sensitive ensemble classification for power-system
//! security assessment, and risk-ranked triage of contingency scenarios
//! under a limited budget of exact assessments.

pub mod calibration;
pub mod experiments;
pub mod grid;
pub mod learner;
pub mod risk_engine;
pub mod scenario_gen;
