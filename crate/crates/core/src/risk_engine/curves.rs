//! Residual error and risk as a function of the assessment budget, for the
//! risk-ranked approach and two reference strategies.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ContingencyParams, RiskError, Scenario};
use crate::grid::{LineId, SecurityLabel};

/// `Z* = (N¹·𝒞·p + N⁰·(1 − 𝒞)·(1 − p)) / |Ω^P|`.
pub fn evaluate_z(n1: usize, n0: usize, ratio: f64, p_c: f64, n_conditions: usize) -> f64 {
    (n1 as f64 * ratio * p_c + n0 as f64 * (1.0 - ratio) * (1.0 - p_c)) / n_conditions.max(1) as f64
}

/// Every integer budget up to 3000 scenarios; stride 100 above (the total is always included).
pub fn budget_sweep(total: usize) -> Vec<usize> {
    if total <= 3000 {
        return (0..=total).collect();
    }
    let mut s: Vec<usize> = (0..=total).step_by(100).collect();
    if *s.last().unwrap() != total {
        s.push(total);
    }
    s
}

/// One scenario in assessment order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedPrediction {
    pub contingency: LineId,
    pub predicted: SecurityLabel,
    pub truth: SecurityLabel,
}

impl OrderedPrediction {
    pub fn from_ranked(ranked: &[Scenario], truth: impl Fn(&Scenario) -> SecurityLabel) -> Vec<Self> {
        ranked
            .iter()
            .map(|s| OrderedPrediction {
                contingency: s.contingency,
                predicted: s.label_pred,
                truth: truth(s),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub budget: usize,
    pub missed: usize,
    pub false_alarms: usize,
    pub z: f64,
}

impl CurvePoint {
    pub fn errors(&self) -> usize {
        self.missed + self.false_alarms
    }
}

/// Residual errors and `Σ_c Z*_c` after assessing the first `S` entries of
/// `order`, for each `S` in `budgets`. Assessed entries carry no error.
/// `params` supplies the (true) costs and probabilities used to weight errors.
pub fn residual_curve(
    order: &[OrderedPrediction],
    params: &[ContingencyParams],
    n_conditions: usize,
    budgets: &[usize],
) -> Result<Vec<CurvePoint>, RiskError> {
    let by_line: BTreeMap<LineId, &ContingencyParams> = params.iter().map(|p| (p.line_id, p)).collect();
    let n = order.len();
    // suffix[k] covers order[k..]
    let mut missed = vec![0usize; n + 1];
    let mut false_alarms = vec![0usize; n + 1];
    let mut z = vec![0.0f64; n + 1];
    for k in (0..n).rev() {
        let o = &order[k];
        let p = by_line
            .get(&o.contingency)
            .ok_or(RiskError::MissingModel(o.contingency))?;
        let (mut m, mut f, mut w) = (0, 0, 0.0);
        match (o.predicted, o.truth) {
            (SecurityLabel::Secure, SecurityLabel::Insecure) => {
                m = 1;
                w = evaluate_z(1, 0, p.cost_ratio(), p.p_c, n_conditions);
            }
            (SecurityLabel::Insecure, SecurityLabel::Secure) => {
                f = 1;
                w = evaluate_z(0, 1, p.cost_ratio(), p.p_c, n_conditions);
            }
            _ => {}
        }
        missed[k] = missed[k + 1] + m;
        false_alarms[k] = false_alarms[k + 1] + f;
        z[k] = z[k + 1] + w;
    }
    Ok(budgets
        .iter()
        .map(|&b| {
            let k = b.min(n);
            CurvePoint {
                budget: b,
                missed: missed[k],
                false_alarms: false_alarms[k],
                z: z[k],
            }
        })
        .collect())
}

/// Smallest budget in `curve` at which no residual error remains.
pub fn zero_error_budget(curve: &[CurvePoint]) -> Option<usize> {
    curve.iter().find(|p| p.errors() == 0).map(|p| p.budget)
}

/// Reference strategy without a model: every scenario gets its contingency's
/// majority training label, and a seeded random order is verified.
pub fn no_ml_order(
    scenarios: &[(LineId, SecurityLabel)],
    majority: &BTreeMap<LineId, SecurityLabel>,
    seed: u64,
) -> Result<Vec<OrderedPrediction>, RiskError> {
    let mut out = scenarios
        .iter()
        .map(|&(c, truth)| {
            let predicted = *majority.get(&c).ok_or(RiskError::MissingModel(c))?;
            Ok(OrderedPrediction {
                contingency: c,
                predicted,
                truth,
            })
        })
        .collect::<Result<Vec<_>, RiskError>>()?;
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(out)
}

/// Reference strategy with plain classifier labels: scenarios predicted
/// secure are verified first, in seeded random order within each group.
pub fn standard_classifier_order(predictions: &[OrderedPrediction], seed: u64) -> Vec<OrderedPrediction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut secure, mut insecure): (Vec<_>, Vec<_>) =
        predictions.iter().copied().partition(|p| p.predicted.is_secure());
    secure.shuffle(&mut rng);
    insecure.shuffle(&mut rng);
    secure.extend(insecure);
    secure
}

/// `budget,missed,false_alarms,errors,z`.
pub fn write_curve_csv(curve: &[CurvePoint], path: &Path) -> Result<(), RiskError> {
    let io = |e: std::io::Error| RiskError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    w.write_record(["budget", "missed", "false_alarms", "errors", "z"])
        .map_err(|e| io(e.into()))?;
    for p in curve {
        w.write_record([
            p.budget.to_string(),
            p.missed.to_string(),
            p.false_alarms.to_string(),
            p.errors().to_string(),
            p.z.to_string(),
        ])
        .map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurvePoint>, RiskError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| RiskError::MalformedFile(e.to_string()))?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| RiskError::MalformedFile(e.to_string()))?;
            let field = |k: usize| rec.get(k).ok_or_else(|| RiskError::MalformedFile("short row".into()));
            let int = |k: usize| -> Result<usize, RiskError> {
                field(k)?
                    .parse()
                    .map_err(|_| RiskError::MalformedFile(format!("bad integer in column {}", k + 1)))
            };
            let point = CurvePoint {
                budget: int(0)?,
                missed: int(1)?,
                false_alarms: int(2)?,
                z: field(4)?
                    .parse()
                    .map_err(|_| RiskError::MalformedFile("bad z".into()))?,
            };
            if point.errors() != int(3)? {
                return Err(RiskError::MalformedFile("errors column disagrees".into()));
            }
            Ok(point)
        })
        .collect()
}
