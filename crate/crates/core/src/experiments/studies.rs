//! Class-imbalance, calibration and decision-threshold studies.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::pipeline::{repetition_database, train_calibrated, write_rows};
use super::{out_path, ExperimentConfig, ExperimentError, Manifest};
use crate::calibration::{brier_score, calibrated_probability, write_reliability_csv, ReliabilityBins};
use crate::grid::SecurityLabel;
use crate::learner::tree_for_contingency;
use crate::risk_engine::{evaluate_z, risk_optimal_predict, ContingencyParams};
use crate::scenario_gen::Split;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceRow {
    /// Repetition index, or `mean`.
    pub repetition: String,
    pub contingency: u32,
    pub prior_secure: f64,
    pub error_rate: f64,
    /// Secure conditions predicted insecure, as a fraction of the test split.
    pub false_alarm_rate: f64,
    /// Insecure conditions predicted secure, as a fraction of the test split.
    pub missed_alarm_rate: f64,
}

fn mean_rows(rows: &[ImbalanceRow], lines: &[u32]) -> Vec<ImbalanceRow> {
    lines
        .iter()
        .map(|&l| {
            let sel: Vec<&ImbalanceRow> = rows.iter().filter(|r| r.contingency == l).collect();
            let n = sel.len() as f64;
            let avg = |f: fn(&ImbalanceRow) -> f64| sel.iter().map(|r| f(r)).sum::<f64>() / n;
            ImbalanceRow {
                repetition: "mean".into(),
                contingency: l,
                prior_secure: avg(|r| r.prior_secure),
                error_rate: avg(|r| r.error_rate),
                false_alarm_rate: avg(|r| r.false_alarm_rate),
                missed_alarm_rate: avg(|r| r.missed_alarm_rate),
            }
        })
        .collect()
}

/// Depth-limited tree per line and repetition; error rates on the test split.
pub fn run_imbalance_study(
    config: &ExperimentConfig,
    db: &crate::scenario_gen::LabeledDatabase,
    out_dir: &Path,
) -> Result<Manifest, ExperimentError> {
    let per_rep: Vec<Vec<ImbalanceRow>> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| {
            let rdb = repetition_database(db, config.seed, r);
            config
                .lines
                .iter()
                .map(|&line| {
                    let tree = tree_for_contingency(&rdb, line, config.learner.max_tree_depth)?;
                    let (x, y) = rdb.split_data(Split::Test, line)?;
                    let n = x.len() as f64;
                    let (mut fa, mut ma) = (0usize, 0usize);
                    for (xi, &yi) in x.iter().zip(&y) {
                        match (tree.predict(xi), yi) {
                            (SecurityLabel::Insecure, SecurityLabel::Secure) => fa += 1,
                            (SecurityLabel::Secure, SecurityLabel::Insecure) => ma += 1,
                            _ => {}
                        }
                    }
                    Ok(ImbalanceRow {
                        repetition: r.to_string(),
                        contingency: line,
                        prior_secure: rdb.class_counts(Split::Train, line)?.priors().1,
                        error_rate: (fa + ma) as f64 / n,
                        false_alarm_rate: fa as f64 / n,
                        missed_alarm_rate: ma as f64 / n,
                    })
                })
                .collect::<Result<Vec<_>, ExperimentError>>()
        })
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<ImbalanceRow> = per_rep.into_iter().flatten().collect();
    let means = mean_rows(&rows, &config.lines);
    rows.extend(means.iter().cloned());
    write_rows(&out_path(out_dir, "imbalance.csv"), &rows)?;

    let summary = json!({
        "mean": means.iter().map(|m| json!({
            "contingency": m.contingency,
            "prior_secure": m.prior_secure,
            "error_rate": m.error_rate,
            "false_alarm_rate": m.false_alarm_rate,
            "missed_alarm_rate": m.missed_alarm_rate,
        })).collect::<Vec<_>>(),
    });
    let manifest = Manifest::new(config, db, vec!["imbalance.csv".into()], summary)?;
    manifest.write(out_dir)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrierRow {
    pub repetition: String,
    pub uncalibrated: f64,
    pub calibrated: f64,
    pub rounds: usize,
    pub platt_a: f64,
    pub platt_b: f64,
}

struct CalibrationRep {
    row: BrierRow,
    raw: ReliabilityBins,
    calibrated: ReliabilityBins,
}

/// Brier score of raw scores and of calibrated probabilities on the test
/// split, per repetition, for the first configured line.
pub fn run_calibration_study(
    config: &ExperimentConfig,
    db: &crate::scenario_gen::LabeledDatabase,
    out_dir: &Path,
) -> Result<Manifest, ExperimentError> {
    let line = config.lines[0];
    let bins = config.calibration.bins;
    let reps: Vec<CalibrationRep> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| {
            let rdb = repetition_database(db, config.seed, r);
            let model = train_calibrated(&rdb, line, config)?;
            let (x, y) = rdb.split_data(Split::Test, line)?;
            let scores: Vec<f64> = x.iter().map(|v| model.ensemble.score(v)).collect();
            let probs: Vec<f64> = scores
                .iter()
                .map(|&s| calibrated_probability(&model.platt, s))
                .collect();
            let raw = brier_score(&scores, &y, bins)?;
            let calibrated = brier_score(&probs, &y, bins)?;
            Ok(CalibrationRep {
                row: BrierRow {
                    repetition: r.to_string(),
                    uncalibrated: raw.brier,
                    calibrated: calibrated.brier,
                    rounds: model.ensemble.len(),
                    platt_a: model.platt.a,
                    platt_b: model.platt.b,
                },
                raw,
                calibrated,
            })
        })
        .collect::<Result<_, ExperimentError>>()?;

    let n = reps.len() as f64;
    let mean_raw = reps.iter().map(|r| r.row.uncalibrated).sum::<f64>() / n;
    let mean_cal = reps.iter().map(|r| r.row.calibrated).sum::<f64>() / n;
    let mut rows: Vec<BrierRow> = reps.iter().map(|r| r.row.clone()).collect();
    rows.push(BrierRow {
        repetition: "mean".into(),
        uncalibrated: mean_raw,
        calibrated: mean_cal,
        rounds: (reps.iter().map(|r| r.row.rounds).sum::<usize>() as f64 / n).round() as usize,
        platt_a: reps.iter().map(|r| r.row.platt_a).sum::<f64>() / n,
        platt_b: reps.iter().map(|r| r.row.platt_b).sum::<f64>() / n,
    });
    write_rows(&out_path(out_dir, "brier.csv"), &rows)?;
    write_reliability_csv(&reps[0].raw, &out_path(out_dir, "reliability_uncalibrated.csv"))?;
    write_reliability_csv(&reps[0].calibrated, &out_path(out_dir, "reliability_calibrated.csv"))?;

    let summary = json!({
        "contingency": line,
        "mean_brier_uncalibrated": mean_raw,
        "mean_brier_calibrated": mean_cal,
        "reduction": 1.0 - mean_cal / mean_raw,
    });
    let manifest = Manifest::new(
        config,
        db,
        vec![
            "brier.csv".into(),
            "reliability_uncalibrated.csv".into(),
            "reliability_calibrated.csv".into(),
        ],
        summary,
    )?;
    manifest.write(out_dir)?;
    Ok(manifest)
}

pub const THRESHOLD_VARIANTS: [&str; 5] = [
    "tree",
    "tree_threshold",
    "adaboost",
    "adaboost_threshold",
    "adaboost_calibrated_threshold",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub variant: String,
    pub cost_ratio: f64,
    pub mean_z: f64,
    pub min_z: f64,
    pub max_z: f64,
}

/// Mean `Z*` without triage for each classifier variant and cost ratio.
/// The contingency probability is set to the insecure training prior.
pub fn run_threshold_study(
    config: &ExperimentConfig,
    db: &crate::scenario_gen::LabeledDatabase,
    out_dir: &Path,
) -> Result<Manifest, ExperimentError> {
    let line = config.lines[0];
    // z[rep][variant][ratio]
    let per_rep: Vec<Vec<Vec<f64>>> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| {
            let rdb = repetition_database(db, config.seed, r);
            let model = train_calibrated(&rdb, line, config)?;
            let tree = tree_for_contingency(&rdb, line, config.learner.max_tree_depth)?;
            let p_c = rdb.class_counts(Split::Train, line)?.priors().0;
            let (x, y) = rdb.split_data(Split::Test, line)?;
            let n = x.len();
            let leaf_p: Vec<f64> = x.iter().map(|v| tree.leaf(v).1).collect();
            let tree_labels: Vec<SecurityLabel> = x.iter().map(|v| tree.predict(v)).collect();
            let scores: Vec<f64> = x.iter().map(|v| model.ensemble.score(v)).collect();
            let votes: Vec<SecurityLabel> = x.iter().map(|v| model.ensemble.vote(v)).collect();
            let probs: Vec<f64> = scores
                .iter()
                .map(|&s| calibrated_probability(&model.platt, s))
                .collect();

            let mut out = vec![Vec::new(); THRESHOLD_VARIANTS.len()];
            for &ratio in &config.cost_ratios {
                let params = ContingencyParams::from_cost_ratio(line, p_c, ratio)?;
                let thresholded = |p: &[f64]| -> Vec<SecurityLabel> {
                    p.iter().map(|&q| risk_optimal_predict(q, &params).0).collect()
                };
                let labels = [
                    tree_labels.clone(),
                    thresholded(&leaf_p),
                    votes.clone(),
                    thresholded(&scores),
                    thresholded(&probs),
                ];
                for (v, pred) in labels.iter().enumerate() {
                    let (mut n1, mut n0) = (0, 0);
                    for (&p, &t) in pred.iter().zip(&y) {
                        match (p, t) {
                            (SecurityLabel::Secure, SecurityLabel::Insecure) => n1 += 1,
                            (SecurityLabel::Insecure, SecurityLabel::Secure) => n0 += 1,
                            _ => {}
                        }
                    }
                    out[v].push(evaluate_z(n1, n0, ratio, p_c, n));
                }
            }
            Ok(out)
        })
        .collect::<Result<_, ExperimentError>>()?;

    let mut rows = Vec::new();
    for (v, name) in THRESHOLD_VARIANTS.iter().enumerate() {
        for (k, &ratio) in config.cost_ratios.iter().enumerate() {
            let zs: Vec<f64> = per_rep.iter().map(|rep| rep[v][k]).collect();
            rows.push(ThresholdRow {
                variant: name.to_string(),
                cost_ratio: ratio,
                mean_z: zs.iter().sum::<f64>() / zs.len() as f64,
                min_z: zs.iter().copied().fold(f64::INFINITY, f64::min),
                max_z: zs.iter().copied().fold(0.0, f64::max),
            });
        }
    }
    write_rows(&out_path(out_dir, "threshold.csv"), &rows)?;
    let summary = json!({
        "contingency": line,
        "rows": rows.len(),
    });
    let manifest = Manifest::new(config, db, vec!["threshold.csv".into()], summary)?;
    manifest.write(out_dir)?;
    Ok(manifest)
}
