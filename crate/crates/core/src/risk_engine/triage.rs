//! Scenario risk ranking and budgeted conventional assessment.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::decision::risk_optimal_predict;
use super::{evaluate_z, ContingencyParams, RiskError};
use crate::calibration::CalibratedEnsemble;
use crate::grid::{LineId, SecurityLabel};
use crate::learner::SingleTree;

/// Anything that maps a feature vector to `p̂¹(x)`.
pub trait ProbabilityModel: Sync {
    fn probability(&self, x: &[f64]) -> f64;
}

impl ProbabilityModel for CalibratedEnsemble {
    fn probability(&self, x: &[f64]) -> f64 {
        CalibratedEnsemble::probability(self, x)
    }
}

impl ProbabilityModel for SingleTree {
    fn probability(&self, x: &[f64]) -> f64 {
        self.leaf(x).1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Position in the contingency-major enumeration `k·|Ω^P| + i`.
    pub id: usize,
    pub condition: u64,
    pub contingency: LineId,
    pub p_i: f64,
    /// `p^I · p^C`.
    pub p_s: f64,
    pub p_hat: f64,
    pub label_pred: SecurityLabel,
    /// `p^I · R_c(x)`.
    pub risk: f64,
}

fn check_probabilities(p_i: &[f64]) -> Result<(), RiskError> {
    let total: f64 = p_i.iter().sum();
    if (total - 1.0).abs() > 1e-9 || p_i.iter().any(|&p| p < 0.0) {
        return Err(RiskError::ProbabilitySum(total));
    }
    Ok(())
}

pub fn uniform_condition_probabilities(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Risk-optimal predictions and descending-risk order from precomputed
/// `p_hat[k][i]` for contingency `params[k]` and condition `i`.
pub fn rank_from_probabilities(
    condition_ids: &[u64],
    p_i: &[f64],
    params: &[ContingencyParams],
    p_hat: &[Vec<f64>],
) -> Result<Vec<Scenario>, RiskError> {
    check_probabilities(p_i)?;
    if condition_ids.len() != p_i.len() || p_hat.len() != params.len() {
        return Err(RiskError::InvalidInput(
            "condition or contingency inputs are misaligned".into(),
        ));
    }
    let n = p_i.len();
    let mut scenarios = Vec::with_capacity(n * params.len());
    for (k, (par, probs)) in params.iter().zip(p_hat).enumerate() {
        if probs.len() != n {
            return Err(RiskError::InvalidInput(format!(
                "contingency {} has {} estimates",
                par.line_id,
                probs.len()
            )));
        }
        for i in 0..n {
            let (label_pred, r) = risk_optimal_predict(probs[i], par);
            scenarios.push(Scenario {
                id: k * n + i,
                condition: condition_ids[i],
                contingency: par.line_id,
                p_i: p_i[i],
                p_s: p_i[i] * par.p_c,
                p_hat: probs[i],
                label_pred,
                risk: p_i[i] * r,
            });
        }
    }
    sort_by_risk(&mut scenarios);
    Ok(scenarios)
}

/// Descending risk; ties by `(contingency, condition)` ascending.
pub fn sort_by_risk(scenarios: &mut [Scenario]) {
    scenarios.sort_by(|a, b| {
        b.risk
            .total_cmp(&a.risk)
            .then(a.contingency.cmp(&b.contingency))
            .then(a.condition.cmp(&b.condition))
    });
}

/// Scores every (condition, contingency) pair with that contingency's model and ranks.
pub fn rank_scenarios<M: ProbabilityModel>(
    features: &[Vec<f64>],
    condition_ids: &[u64],
    p_i: &[f64],
    params: &[ContingencyParams],
    models: &BTreeMap<LineId, M>,
) -> Result<Vec<Scenario>, RiskError> {
    let p_hat = params
        .iter()
        .map(|par| {
            let model = models.get(&par.line_id).ok_or(RiskError::MissingModel(par.line_id))?;
            Ok(features.par_iter().map(|x| model.probability(x)).collect())
        })
        .collect::<Result<Vec<Vec<f64>>, RiskError>>()?;
    rank_from_probabilities(condition_ids, p_i, params, &p_hat)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Assessment {
    Assessed(SecurityLabel),
    /// The oracle failed; severity is unknown.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyOutcome {
    pub line_id: LineId,
    /// Insecure scenarios predicted secure, among the unassessed.
    pub n1: usize,
    /// Secure scenarios predicted insecure, among the unassessed.
    pub n0: usize,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageReport {
    pub budget: usize,
    pub ranked: Vec<Scenario>,
    /// Outcomes of the first `high_count` ranked scenarios.
    pub assessments: Vec<Assessment>,
    pub cvm: f64,
    pub risk_sa: f64,
    pub risk_ml: f64,
    pub risk_tot: f64,
    pub failures: usize,
    /// Present when true labels were supplied.
    pub per_contingency: Option<Vec<ContingencyOutcome>>,
}

impl TriageReport {
    pub fn high_count(&self) -> usize {
        self.assessments.len()
    }

    pub fn high_set(&self) -> &[Scenario] {
        &self.ranked[..self.high_count()]
    }

    pub fn low_set(&self) -> &[Scenario] {
        &self.ranked[self.high_count()..]
    }

    pub fn total_z(&self) -> Option<f64> {
        self.per_contingency.as_ref().map(|v| v.iter().map(|c| c.z).sum())
    }
}

/// Assesses the top `min(budget, |Ω^S|)` scenarios with `oracle`; the rest
/// keep their ML prediction. Severity is binary: `C^F1` when insecure.
pub fn triage<O, E, T>(
    ranked: Vec<Scenario>,
    budget: usize,
    params: &[ContingencyParams],
    oracle: O,
    truth: Option<T>,
    n_conditions: usize,
) -> Result<TriageReport, RiskError>
where
    O: Fn(&Scenario) -> Result<SecurityLabel, E> + Sync,
    E: std::fmt::Display,
    T: Fn(&Scenario) -> SecurityLabel,
{
    let by_line: BTreeMap<LineId, &ContingencyParams> = params.iter().map(|p| (p.line_id, p)).collect();
    let lookup = |c: LineId| by_line.get(&c).copied().ok_or(RiskError::MissingModel(c));
    for s in &ranked {
        lookup(s.contingency)?;
    }
    let high = budget.min(ranked.len());
    let assessments: Vec<Assessment> = ranked[..high]
        .par_iter()
        .map(|s| match oracle(s) {
            Ok(label) => Assessment::Assessed(label),
            Err(e) => Assessment::Failed(e.to_string()),
        })
        .collect();

    let mut risk_sa = 0.0;
    let mut failures = 0;
    for (s, a) in ranked.iter().zip(&assessments) {
        match a {
            Assessment::Assessed(SecurityLabel::Insecure) => risk_sa += s.p_s * lookup(s.contingency)?.c_f1,
            Assessment::Assessed(SecurityLabel::Secure) => {}
            Assessment::Failed(_) => failures += 1,
        }
    }
    let risk_ml: f64 = ranked[high..].iter().map(|s| s.risk).sum();

    let per_contingency = truth.map(|truth| {
        let mut counts: BTreeMap<LineId, (usize, usize)> = params.iter().map(|p| (p.line_id, (0, 0))).collect();
        for s in &ranked[high..] {
            let entry = counts.get_mut(&s.contingency).expect("checked above");
            match (s.label_pred, truth(s)) {
                (SecurityLabel::Secure, SecurityLabel::Insecure) => entry.0 += 1,
                (SecurityLabel::Insecure, SecurityLabel::Secure) => entry.1 += 1,
                _ => {}
            }
        }
        params
            .iter()
            .map(|p| {
                let (n1, n0) = counts[&p.line_id];
                ContingencyOutcome {
                    line_id: p.line_id,
                    n1,
                    n0,
                    z: evaluate_z(n1, n0, p.cost_ratio(), p.p_c, n_conditions),
                }
            })
            .collect()
    });

    let cvm = if ranked.is_empty() {
        0.0
    } else {
        high as f64 / ranked.len() as f64
    };
    Ok(TriageReport {
        budget,
        ranked,
        assessments,
        cvm,
        risk_sa,
        risk_ml,
        risk_tot: risk_sa + risk_ml,
        failures,
        per_contingency,
    })
}

/// `rank,scenario,condition,contingency,p_hat,label_pred,risk,in_high_set,oracle_label`.
pub fn write_triage_csv(report: &TriageReport, path: &Path) -> Result<(), RiskError> {
    let io = |e: std::io::Error| RiskError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record([
        "rank",
        "scenario",
        "condition",
        "contingency",
        "p_hat",
        "label_pred",
        "risk",
        "in_high_set",
        "oracle_label",
    ])
    .map_err(|e| io(e.into()))?;
    for (rank, s) in report.ranked.iter().enumerate() {
        let oracle = match report.assessments.get(rank) {
            Some(Assessment::Assessed(l)) => l.as_u8().to_string(),
            Some(Assessment::Failed(_)) => "unknown".to_string(),
            None => String::new(),
        };
        w.write_record([
            (rank + 1).to_string(),
            s.id.to_string(),
            s.condition.to_string(),
            s.contingency.to_string(),
            s.p_hat.to_string(),
            s.label_pred.as_u8().to_string(),
            s.risk.to_string(),
            u8::from(rank < report.high_count()).to_string(),
            oracle,
        ])
        .map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

/// One parsed row of a triage CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageRow {
    pub rank: usize,
    pub scenario: usize,
    pub condition: u64,
    pub contingency: LineId,
    pub p_hat: f64,
    pub label_pred: u8,
    pub risk: f64,
    pub in_high_set: u8,
    /// `0`/`1` when assessed, `unknown` on oracle failure, empty otherwise.
    pub oracle_label: Option<String>,
}

pub fn read_triage_csv(path: &Path) -> Result<Vec<TriageRow>, RiskError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| RiskError::MalformedFile(e.to_string()))?;
    r.deserialize()
        .map(|row| row.map_err(|e| RiskError::MalformedFile(e.to_string())))
        .collect()
}
