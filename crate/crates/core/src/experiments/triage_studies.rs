//! Budgeted triage studies: single contingency, joint multi-contingency
//! ranking, and sensitivity to distorted parameters.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::pipeline::{oracle_label, repetition_seed, stored_label, test_conditions, train_all, ContingencyModel};
use super::{out_path, ExperimentConfig, ExperimentError, Manifest, PerturbScope};
use crate::grid::{GridModel, LineId, SecurityLabel};
use crate::risk_engine::{
    budget_sweep, no_ml_order, perturb_params, rank_from_probabilities, residual_curve, standard_classifier_order,
    triage, uniform_condition_probabilities, write_curve_csv, write_triage_csv, zero_error_budget, ContingencyParams,
    CurvePoint, OrderedPrediction, PerturbTarget, Scenario,
};
use crate::scenario_gen::{LabeledDatabase, Split};

/// Model outputs on the test split, indexed `[contingency][condition]`.
struct Scored {
    ids: Vec<u64>,
    p_hat: Vec<Vec<f64>>,
    votes: Vec<Vec<SecurityLabel>>,
}

fn score_test(db: &LabeledDatabase, models: &[ContingencyModel]) -> Scored {
    let (ids, features) = test_conditions(db);
    let p_hat = models
        .iter()
        .map(|m| {
            let c = m.calibrated();
            features.iter().map(|x| c.probability(x)).collect()
        })
        .collect();
    let votes = models
        .iter()
        .map(|m| features.iter().map(|x| m.ensemble.vote(x)).collect())
        .collect();
    Scored { ids, p_hat, votes }
}

fn budgets(config: &ExperimentConfig, n_scenarios: usize) -> Vec<usize> {
    config.budgets.clone().unwrap_or_else(|| budget_sweep(n_scenarios))
}

fn ranked_order(db: &LabeledDatabase, ranked: &[Scenario]) -> Vec<OrderedPrediction> {
    OrderedPrediction::from_ranked(ranked, |s| stored_label(db, s.condition, s.contingency))
}

fn standard_order(db: &LabeledDatabase, lines: &[LineId], scored: &Scored, seed: u64) -> Vec<OrderedPrediction> {
    let preds: Vec<OrderedPrediction> = lines
        .iter()
        .enumerate()
        .flat_map(|(k, &line)| scored.ids.iter().enumerate().map(move |(i, &id)| (k, line, i, id)))
        .map(|(k, line, i, id)| OrderedPrediction {
            contingency: line,
            predicted: scored.votes[k][i],
            truth: stored_label(db, id, line),
        })
        .collect();
    standard_classifier_order(&preds, seed)
}

fn first_halving_budget(curve: &[CurvePoint]) -> Option<usize> {
    let z0 = curve.first()?.z;
    curve.iter().find(|p| p.z <= 0.5 * z0).map(|p| p.budget)
}

fn z_at(curve: &[CurvePoint], budget: usize) -> f64 {
    // last sweep point at or below the budget
    curve
        .iter()
        .rev()
        .find(|p| p.budget <= budget)
        .map(|p| p.z)
        .unwrap_or(f64::NAN)
}

fn weakly_below(a: &[CurvePoint], b: &[CurvePoint]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.z <= y.z * (1.0 + 1e-12) + 1e-300)
}

/// Shared body of the single- and multi-contingency triage studies.
fn run_ranked_triage(
    grid: &GridModel,
    config: &ExperimentConfig,
    db: &LabeledDatabase,
    out_dir: &Path,
    prefix: &str,
) -> Result<Manifest, ExperimentError> {
    let params = config.resolve_params()?;
    let models = train_all(db, &config.lines, config)?;
    let scored = score_test(db, &models);
    let n = scored.ids.len();
    let p_i = uniform_condition_probabilities(n);
    let ranked = rank_from_probabilities(&scored.ids, &p_i, &params, &scored.p_hat)?;
    let sweep = budgets(config, ranked.len());

    let proposed = residual_curve(&ranked_order(db, &ranked), &params, n, &sweep)?;
    let standard = residual_curve(
        &standard_order(db, &config.lines, &scored, repetition_seed(config.seed, 101)),
        &params,
        n,
        &sweep,
    )?;
    let majority: BTreeMap<LineId, SecurityLabel> = config
        .lines
        .iter()
        .map(|&l| Ok((l, db.class_counts(Split::Train, l)?.majority())))
        .collect::<Result<_, ExperimentError>>()?;
    let scenarios: Vec<(LineId, SecurityLabel)> = config
        .lines
        .iter()
        .flat_map(|&l| scored.ids.iter().map(move |&id| (l, id)))
        .map(|(l, id)| (l, stored_label(db, id, l)))
        .collect();
    let no_ml = residual_curve(
        &no_ml_order(&scenarios, &majority, repetition_seed(config.seed, 102))?,
        &params,
        n,
        &sweep,
    )?;

    let files = [
        (format!("{prefix}_proposed.csv"), &proposed),
        (format!("{prefix}_standard.csv"), &standard),
        (format!("{prefix}_no_ml.csv"), &no_ml),
    ];
    for (name, curve) in &files {
        write_curve_csv(curve, &out_path(out_dir, name))?;
    }

    let s_star = zero_error_budget(&proposed);
    let report_budget = config.triage_budget.or(s_star).unwrap_or(ranked.len());
    let range = config.corrective_range_mw;
    let report = triage(
        ranked.clone(),
        report_budget,
        &params,
        |s: &Scenario| oracle_label(grid, db, s.condition, s.contingency, range),
        Some(|s: &Scenario| stored_label(db, s.condition, s.contingency)),
        n,
    )?;
    let mismatches = report
        .high_set()
        .iter()
        .zip(&report.assessments)
        .filter(|(s, a)| {
            !matches!(a, crate::risk_engine::Assessment::Assessed(l) if *l == stored_label(db, s.condition, s.contingency))
        })
        .count();
    let report_name = format!("{prefix}_report.csv");
    write_triage_csv(&report, &out_path(out_dir, &report_name))?;

    let total = ranked.len();
    let quarter = total / 4;
    let summary = json!({
        "contingencies": config.lines,
        "params": params,
        "conditions": n,
        "scenarios": total,
        "model_rounds": models.iter().map(|m| m.ensemble.len()).collect::<Vec<_>>(),
        "zero_error_budget": {
            "proposed": s_star,
            "standard": zero_error_budget(&standard),
            "no_ml": zero_error_budget(&no_ml),
        },
        "initial_errors": proposed.first().map(|p| p.errors()),
        "z_at_zero": proposed.first().map(|p| p.z),
        "z_at_quarter": z_at(&proposed, quarter),
        "halving_budget": first_halving_budget(&proposed),
        "below_no_ml": weakly_below(&proposed, &no_ml),
        "below_standard": weakly_below(&proposed, &standard),
        "report": {
            "budget": report_budget,
            "cvm": report.cvm,
            "risk_sa": report.risk_sa,
            "risk_ml": report.risk_ml,
            "risk_tot": report.risk_tot,
            "failures": report.failures,
            "oracle_mismatches": mismatches,
            "z": report.total_z(),
        },
    });
    let mut outputs: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    outputs.push(report_name);
    let manifest = Manifest::new(config, db, outputs, summary)?;
    manifest.write(out_dir)?;
    Ok(manifest)
}

/// Risk-ranked triage against the two reference strategies.
pub fn run_triage_study(
    grid: &GridModel,
    config: &ExperimentConfig,
    db: &LabeledDatabase,
    out_dir: &Path,
) -> Result<Manifest, ExperimentError> {
    run_ranked_triage(grid, config, db, out_dir, "triage")
}

/// Joint ranking of all (condition, contingency) scenarios.
pub fn run_multi_contingency_study(
    grid: &GridModel,
    config: &ExperimentConfig,
    db: &LabeledDatabase,
    out_dir: &Path,
) -> Result<Manifest, ExperimentError> {
    run_ranked_triage(grid, config, db, out_dir, "multi")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityVariant {
    pub name: String,
    pub factor: f64,
    pub target: PerturbTarget,
}

/// The unperturbed reference, then costs, probabilities and both scaled by `α` and `1/α`.
pub fn sensitivity_variants(alpha: f64) -> Vec<SensitivityVariant> {
    let mut v = vec![SensitivityVariant {
        name: "reference".into(),
        factor: 1.0,
        target: PerturbTarget::Both,
    }];
    for (label, target) in [
        ("costs", PerturbTarget::Costs),
        ("probabilities", PerturbTarget::Probabilities),
        ("both", PerturbTarget::Both),
    ] {
        for (dir, factor) in [("up", alpha), ("down", 1.0 / alpha)] {
            v.push(SensitivityVariant {
                name: format!("{label}_{dir}"),
                factor,
                target,
            });
        }
    }
    v
}

/// Ranking with distorted parameters, residual risk with the true ones.
pub fn run_sensitivity_study(
    config: &ExperimentConfig,
    db: &LabeledDatabase,
    out_dir: &Path,
) -> Result<Manifest, ExperimentError> {
    let truth = config.resolve_params()?;
    let models = train_all(db, &config.lines, config)?;
    let scored = score_test(db, &models);
    let n = scored.ids.len();
    let p_i = uniform_condition_probabilities(n);
    let sweep = budgets(config, n * truth.len());
    let alpha = config.sensitivity.alpha;
    let single = match config.sensitivity.scope {
        PerturbScope::All => None,
        PerturbScope::Single => {
            Some(ChaCha8Rng::seed_from_u64(repetition_seed(config.seed, 103)).random_range(0..truth.len()))
        }
    };

    let standard = residual_curve(
        &standard_order(db, &config.lines, &scored, repetition_seed(config.seed, 101)),
        &truth,
        n,
        &sweep,
    )?;
    write_curve_csv(&standard, &out_path(out_dir, "sensitivity_standard.csv"))?;
    let mut outputs = vec!["sensitivity_standard.csv".to_string()];
    let tenth = n * truth.len() / 10;
    let mut variants_summary = Vec::new();
    let mut reference_curve: Option<Vec<CurvePoint>> = None;

    for v in sensitivity_variants(alpha) {
        let distorted: Vec<ContingencyParams> = truth
            .iter()
            .enumerate()
            .map(|(k, p)| {
                if single.is_none_or(|s| s == k) {
                    perturb_params(p, v.factor, v.target)
                } else {
                    *p
                }
            })
            .collect();
        let ranked = rank_from_probabilities(&scored.ids, &p_i, &distorted, &scored.p_hat)?;
        let curve = residual_curve(&ranked_order(db, &ranked), &truth, n, &sweep)?;
        let name = format!("sensitivity_{}.csv", v.name);
        write_curve_csv(&curve, &out_path(out_dir, &name))?;
        outputs.push(name);
        let reference = reference_curve.get_or_insert_with(|| curve.clone());
        variants_summary.push(json!({
            "name": v.name,
            "factor": v.factor,
            "target": v.target,
            "z_at_zero": curve.first().map(|p| p.z),
            "z_at_tenth": z_at(&curve, tenth),
            "above_reference_at_tenth": z_at(&curve, tenth) >= z_at(reference, tenth),
            "below_standard": weakly_below(&curve, &standard),
            "zero_error_budget": zero_error_budget(&curve),
        }));
    }
    let summary = json!({
        "alpha": alpha,
        "headline_target": config.sensitivity.target,
        "perturbed_contingency": single.map(|k| truth[k].line_id),
        "standard_zero_error_budget": zero_error_budget(&standard),
        "variants": variants_summary,
    });
    let manifest = Manifest::new(config, db, outputs, summary)?;
    manifest.write(out_dir)?;
    Ok(manifest)
}
