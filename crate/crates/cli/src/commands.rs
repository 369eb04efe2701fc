use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use riskgate::calibration::{brier_score, fit_platt, write_reliability_csv, CalibratedEnsemble, PlattParams};
use riskgate::experiments::{
    oracle_label, prepare_database, run_experiment, stored_label, test_conditions, ExperimentConfig, ExperimentKind,
};
use riskgate::grid::{GridModel, LineId, SecurityLabel};
use riskgate::learner::{
    load_model, save_model, train_for_contingency, BoostConfig, BoostMode, LearnerError, ModelFile, StoredCalibration,
};
use riskgate::risk_engine::{
    budget_sweep, load_params, no_ml_order, rank_scenarios, residual_curve, standard_classifier_order,
    triage as run_triage, uniform_condition_probabilities, write_curve_csv, write_triage_csv, zero_error_budget,
    ContingencyParams, OrderedPrediction, Scenario,
};
use riskgate::scenario_gen::{load_database, save_database, LabeledDatabase, Split};

use crate::error::CliError;
use crate::Overrides;

pub fn load_grid(path: Option<&Path>) -> Result<GridModel, CliError> {
    match path {
        None => Ok(GridModel::case6ww()),
        Some(p) => GridModel::load(p).map_err(CliError::data),
    }
}

/// Config file (or the defaults of `kind`) with command-line flags applied.
fn resolve_config(kind: ExperimentKind, o: &Overrides) -> Result<ExperimentConfig, CliError> {
    let base = match &o.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::for_kind(kind),
    };
    let mut patch = Map::new();
    let mut learner = Map::new();
    if let Some(seed) = o.seed {
        patch.insert("seed".into(), json!(seed));
    }
    if let Some(r) = o.rounds {
        learner.insert("rounds".into(), json!(r));
    }
    if let Some(m) = &o.mode {
        let mode = BoostMode::parse(m).ok_or_else(|| CliError::Config(format!("unknown mode `{m}`")))?;
        learner.insert("mode".into(), json!(mode));
    }
    if !learner.is_empty() {
        patch.insert("learner".into(), Value::Object(learner));
    }
    if let Some(b) = o.bins {
        patch.insert("calibration".into(), json!({ "bins": b }));
    }
    if let Some(s) = o.budget {
        patch.insert("triage_budget".into(), json!(s));
    }
    Ok(base.merged(&Value::Object(patch))?)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

fn load_db(path: &Path) -> Result<LabeledDatabase, CliError> {
    load_database(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn model_path(dir: &Path, line: LineId) -> PathBuf {
    dir.join(format!("model_c{line}.json"))
}

/// Every `model_c<line>.json` in `dir`, keyed by contingency.
fn load_models(dir: &Path) -> Result<BTreeMap<LineId, ModelFile>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let mut models = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(CliError::data)?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if !(name.starts_with("model_c") && name.ends_with(".json")) {
            continue;
        }
        let model = load_model(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        models.insert(model.contingency, model);
    }
    if models.is_empty() {
        return Err(CliError::Data(format!(
            "no model_c<line>.json files in {}",
            dir.display()
        )));
    }
    Ok(models)
}

fn calibrated(model: &ModelFile) -> CalibratedEnsemble {
    CalibratedEnsemble {
        ensemble: model.ensemble(),
        platt: model.calibration.map(|c| PlattParams::fixed(c.a, c.b)),
    }
}

fn learner_error(e: LearnerError) -> CliError {
    match e {
        LearnerError::SingleClassData | LearnerError::DegenerateData => CliError::data(e),
        other => CliError::runtime(other),
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("summary serializes"));
}

pub fn generate(grid: &GridModel, o: &Overrides, out: &Path) -> Result<(), CliError> {
    let config = resolve_config(ExperimentKind::Sensitivity, o)?;
    let db = prepare_database(grid, &config)?;
    create_dir(out)?;
    let path = out.join("dataset.csv");
    save_database(&db, &path).map_err(CliError::runtime)?;
    println!(
        "wrote {} conditions for lines {:?} to {}",
        db.len(),
        db.contingencies,
        path.display()
    );
    Ok(())
}

pub fn train(data: &Path, o: &Overrides, out: &Path) -> Result<(), CliError> {
    let config = resolve_config(ExperimentKind::Sensitivity, o)?;
    let db = load_db(data)?;
    let boost = BoostConfig {
        rounds: config.learner.rounds,
        mode: config.learner.mode,
        k_folds: config.learner.k_folds,
    };
    create_dir(out)?;
    for &line in &db.contingencies {
        let (ensemble, cv) = train_for_contingency(&db, line, &boost).map_err(learner_error)?;
        let path = model_path(out, line);
        save_model(&ModelFile::new(line, &ensemble, None), &path).map_err(CliError::runtime)?;
        println!("line {line}: {} rounds -> {}", cv.selected_rounds, path.display());
    }
    Ok(())
}

pub fn calibrate(data: &Path, models: &Path, o: &Overrides, out: &Path) -> Result<(), CliError> {
    let config = resolve_config(ExperimentKind::Calibration, o)?;
    let bins = config.calibration.bins;
    let db = load_db(data)?;
    let files = load_models(models)?;
    create_dir(out)?;
    for (line, mut model) in files {
        let ensemble = model.ensemble();
        let (xc, yc) = db.split_data(Split::Calib, line).map_err(CliError::data)?;
        let calib_scores: Vec<f64> = xc.iter().map(|x| ensemble.score(x)).collect();
        let platt = fit_platt(&calib_scores, &yc).map_err(CliError::data)?;
        model.calibration = Some(StoredCalibration { a: platt.a, b: platt.b });

        let (xt, yt) = db.split_data(Split::Test, line).map_err(CliError::data)?;
        let scores: Vec<f64> = xt.iter().map(|x| ensemble.score(x)).collect();
        let probs: Vec<f64> = scores.iter().map(|&s| platt.probability(s)).collect();
        let raw = brier_score(&scores, &yt, bins).map_err(CliError::config)?;
        let cal = brier_score(&probs, &yt, bins).map_err(CliError::config)?;
        write_reliability_csv(&raw, &out.join(format!("reliability_c{line}_uncalibrated.csv")))
            .map_err(CliError::runtime)?;
        write_reliability_csv(&cal, &out.join(format!("reliability_c{line}_calibrated.csv")))
            .map_err(CliError::runtime)?;
        save_model(&model, &model_path(out, line)).map_err(CliError::runtime)?;
        println!(
            "line {line}: a = {:.4}, b = {:.4}, test Brier {:.5} -> {:.5}",
            platt.a, platt.b, raw.brier, cal.brier
        );
    }
    Ok(())
}

/// Test-split scenarios ranked by residual risk.
struct Ranking {
    db: LabeledDatabase,
    params: Vec<ContingencyParams>,
    models: BTreeMap<LineId, ModelFile>,
    n_conditions: usize,
    ranked: Vec<Scenario>,
}

fn rank(data: &Path, models: &Path, contingencies: &Path) -> Result<Ranking, CliError> {
    let db = load_db(data)?;
    let models = load_models(models)?;
    let params = load_params(contingencies).map_err(|e| CliError::Data(format!("{}: {e}", contingencies.display())))?;
    for p in &params {
        db.contingency_index(p.line_id).map_err(CliError::data)?;
        if !models.contains_key(&p.line_id) {
            return Err(CliError::Data(format!("no model for contingency {}", p.line_id)));
        }
    }
    let (ids, features) = test_conditions(&db);
    if ids.is_empty() {
        return Err(CliError::Data("dataset has no test-split conditions".into()));
    }
    let p_i = uniform_condition_probabilities(ids.len());
    let wrapped: BTreeMap<LineId, CalibratedEnsemble> = models.iter().map(|(&l, m)| (l, calibrated(m))).collect();
    let ranked = rank_scenarios(&features, &ids, &p_i, &params, &wrapped).map_err(CliError::data)?;
    Ok(Ranking {
        n_conditions: ids.len(),
        db,
        params,
        models,
        ranked,
    })
}

pub fn triage(
    grid: &GridModel,
    data: &Path,
    models: &Path,
    contingencies: &Path,
    o: &Overrides,
    out: &Path,
) -> Result<(), CliError> {
    let config = resolve_config(ExperimentKind::Triage, o)?;
    let budget = config
        .triage_budget
        .ok_or_else(|| CliError::Config("triage needs --budget".into()))?;
    let r = rank(data, models, contingencies)?;
    let range = config.corrective_range_mw;
    let db = &r.db;
    let report = run_triage(
        r.ranked,
        budget,
        &r.params,
        |s: &Scenario| oracle_label(grid, db, s.condition, s.contingency, range),
        Some(|s: &Scenario| stored_label(db, s.condition, s.contingency)),
        r.n_conditions,
    )
    .map_err(CliError::runtime)?;
    create_dir(out)?;
    let path = out.join("triage.csv");
    write_triage_csv(&report, &path).map_err(CliError::runtime)?;
    print_json(&json!({
        "budget": report.budget,
        "scenarios": report.ranked.len(),
        "cvm": report.cvm,
        "risk_sa": report.risk_sa,
        "risk_ml": report.risk_ml,
        "risk_tot": report.risk_tot,
        "failures": report.failures,
        "z": report.total_z(),
        "output": path.display().to_string(),
    }));
    Ok(())
}

pub fn evaluate(data: &Path, models: &Path, contingencies: &Path, o: &Overrides, out: &Path) -> Result<(), CliError> {
    let config = resolve_config(ExperimentKind::Multi, o)?;
    let r = rank(data, models, contingencies)?;
    let db = &r.db;
    let n = r.n_conditions;
    let sweep = budget_sweep(r.ranked.len());
    let (ids, features) = test_conditions(db);

    let proposed_order = OrderedPrediction::from_ranked(&r.ranked, |s| stored_label(db, s.condition, s.contingency));
    let mut votes = Vec::new();
    let mut labels = Vec::new();
    let mut majority = BTreeMap::new();
    for p in &r.params {
        let line = p.line_id;
        let ensemble = r.models[&line].ensemble();
        for (x, &id) in features.iter().zip(&ids) {
            let truth = stored_label(db, id, line);
            votes.push(OrderedPrediction {
                contingency: line,
                predicted: ensemble.vote(x),
                truth,
            });
            labels.push((line, truth));
        }
        let counts = db.class_counts(Split::Train, line).map_err(CliError::data)?;
        let label = if counts.total() == 0 {
            SecurityLabel::Secure
        } else {
            counts.majority()
        };
        majority.insert(line, label);
    }
    let curves = [
        ("curve_proposed.csv", proposed_order),
        ("curve_standard.csv", standard_classifier_order(&votes, config.seed)),
        (
            "curve_no_ml.csv",
            no_ml_order(&labels, &majority, config.seed.wrapping_add(1)).map_err(CliError::runtime)?,
        ),
    ];
    create_dir(out)?;
    let mut summary = Map::new();
    for (name, order) in &curves {
        let curve = residual_curve(order, &r.params, n, &sweep).map_err(CliError::runtime)?;
        write_curve_csv(&curve, &out.join(name)).map_err(CliError::runtime)?;
        let key = name.trim_start_matches("curve_").trim_end_matches(".csv");
        summary.insert(
            key.to_string(),
            json!({
                "z_at_zero": curve.first().map(|p| p.z),
                "initial_errors": curve.first().map(|p| p.errors()),
                "zero_error_budget": zero_error_budget(&curve),
            }),
        );
    }
    summary.insert("scenarios".into(), json!(r.ranked.len()));
    print_json(&Value::Object(summary));
    Ok(())
}

pub fn experiment(grid: &GridModel, name: &str, o: &Overrides, out: Option<PathBuf>) -> Result<(), CliError> {
    let kind = ExperimentKind::parse(name).ok_or_else(|| CliError::Config(format!("unknown experiment `{name}`")))?;
    let config = resolve_config(kind, o)?;
    if config.experiment != kind {
        return Err(CliError::Config(format!(
            "config file is for `{}`, not `{name}`",
            config.experiment.as_str()
        )));
    }
    let out = out.unwrap_or_else(|| PathBuf::from("results").join(kind.as_str()));
    let manifest = run_experiment(grid, &config, &out)?;
    print_json(&json!({
        "experiment": kind.as_str(),
        "out": out.display().to_string(),
        "config_hash": manifest.config_hash,
        "priors": manifest.priors,
        "summary": manifest.summary,
    }));
    Ok(())
}
