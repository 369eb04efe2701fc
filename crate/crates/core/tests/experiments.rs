use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;

use riskgate::calibration::read_reliability_csv;
use riskgate::experiments::{
    prepare_database, read_rows, run_experiment, run_on_database, BrierRow, ExperimentConfig, ExperimentKind,
    ImbalanceRow, Manifest, ThresholdRow, THRESHOLD_VARIANTS,
};
use riskgate::grid::GridModel;
use riskgate::risk_engine::{read_curve_csv, read_triage_csv, CurvePoint};
use riskgate::scenario_gen::{load_database, LabeledDatabase, SplitSizes};

// lines 1 and 11 are ~99% secure; the calibration split needs both classes
const SPLITS: SplitSizes = SplitSizes {
    train: 300,
    calib: 500,
    test: 150,
};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::for_kind(kind);
    c.splits = SPLITS;
    c.learner.rounds = 15;
    c
}

fn pool() -> &'static LabeledDatabase {
    static DB: OnceLock<LabeledDatabase> = OnceLock::new();
    DB.get_or_init(|| {
        let mut c = small(ExperimentKind::Sensitivity);
        c.lines = (1..=11).collect();
        prepare_database(&GridModel::case6ww(), &c).unwrap()
    })
}

fn run(config: &ExperimentConfig, dir: &Path) -> Manifest {
    run_on_database(&GridModel::case6ww(), config, pool(), dir).unwrap()
}

/// Files present in `dir` other than the manifest.
fn files(dir: &Path) -> BTreeSet<String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect()
}

fn assert_outputs_listed(m: &Manifest, dir: &Path) {
    let listed: BTreeSet<String> = m.outputs.iter().cloned().collect();
    assert_eq!(listed, files(dir));
    assert_eq!(&Manifest::load(&dir.join("manifest.json")).unwrap(), m);
    assert_eq!(m.config_hash.len(), 64);
    assert!(m.version.starts_with("riskgate-"));
}

fn assert_ends_at_zero(curve: &[CurvePoint]) {
    let last = curve.last().unwrap();
    assert_eq!(last.z, 0.0);
    assert_eq!(last.missed + last.false_alarms, 0);
}

#[test]
fn imbalance_rows_per_line_and_repetition() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&small(ExperimentKind::Imbalance), dir.path());
    assert_outputs_listed(&m, dir.path());
    let rows: Vec<ImbalanceRow> = read_rows(&dir.path().join("imbalance.csv")).unwrap();
    assert_eq!(rows.len(), 2 * (10 + 1));
    for r in &rows {
        assert!((r.error_rate - (r.false_alarm_rate + r.missed_alarm_rate)).abs() < 1e-12);
    }
    assert_eq!(rows.iter().filter(|r| r.repetition == "mean").count(), 2);
    assert_eq!(m.priors.len(), 2);
}

#[test]
fn calibration_outputs_reparse() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(ExperimentKind::Calibration);
    c.repetitions = 3;
    c.calibration.bins = 7;
    let m = run(&c, dir.path());
    assert_outputs_listed(&m, dir.path());
    let rows: Vec<BrierRow> = read_rows(&dir.path().join("brier.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    for name in ["reliability_uncalibrated.csv", "reliability_calibrated.csv"] {
        let bins = read_reliability_csv(&dir.path().join(name)).unwrap();
        assert_eq!(bins.bins.len(), 7);
        assert_eq!(bins.bins.iter().map(|b| b.count).sum::<usize>(), SPLITS.test);
    }
    let rep0 = read_reliability_csv(&dir.path().join("reliability_calibrated.csv")).unwrap();
    assert!((rep0.brier - rows[0].calibrated).abs() < 1e-12);
    assert!(rows.iter().all(|r| r.platt_a <= 0.0));
}

#[test]
fn threshold_table_is_complete() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(ExperimentKind::Threshold);
    c.repetitions = 2;
    let m = run(&c, dir.path());
    assert_outputs_listed(&m, dir.path());
    let rows: Vec<ThresholdRow> = read_rows(&dir.path().join("threshold.csv")).unwrap();
    assert_eq!(rows.len(), THRESHOLD_VARIANTS.len() * 7);
    for r in &rows {
        assert!(r.min_z <= r.mean_z && r.mean_z <= r.max_z);
    }
}

#[test]
fn triage_curves_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(ExperimentKind::Triage);
    c.triage_budget = Some(30);
    let m = run(&c, dir.path());
    assert_outputs_listed(&m, dir.path());
    for name in ["triage_proposed.csv", "triage_standard.csv", "triage_no_ml.csv"] {
        let curve = read_curve_csv(&dir.path().join(name)).unwrap();
        assert_eq!(curve.len(), SPLITS.test + 1);
        assert_ends_at_zero(&curve);
    }
    let report = read_triage_csv(&dir.path().join("triage_report.csv")).unwrap();
    assert_eq!(report.len(), SPLITS.test);
    assert_eq!(report.iter().filter(|r| r.in_high_set == 1).count(), 30);
    assert!(report.windows(2).all(|w| w[0].risk >= w[1].risk));
    assert_eq!(m.summary["report"]["oracle_mismatches"], 0);
}

#[test]
fn multi_ranks_every_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&small(ExperimentKind::Multi), dir.path());
    assert_eq!(m.summary["scenarios"], 2 * SPLITS.test);
    let curve = read_curve_csv(&dir.path().join("multi_proposed.csv")).unwrap();
    assert!(curve.windows(2).all(|w| w[1].z <= w[0].z));
    assert_ends_at_zero(&curve);
}

#[test]
fn identity_distortion_reproduces_reference() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(ExperimentKind::Sensitivity);
    c.sensitivity.alpha = 1.0;
    let m = run(&c, dir.path());
    assert_outputs_listed(&m, dir.path());
    let reference = read_curve_csv(&dir.path().join("sensitivity_reference.csv")).unwrap();
    for name in files(dir.path()) {
        let curve = read_curve_csv(&dir.path().join(&name)).unwrap();
        assert_ends_at_zero(&curve);
        if name != "sensitivity_standard.csv" {
            assert_eq!(curve, reference, "{name}");
        }
    }
}

#[test]
fn distorted_curves_end_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&small(ExperimentKind::Sensitivity), dir.path());
    assert_eq!(m.summary["variants"].as_array().unwrap().len(), 7);
    for name in files(dir.path()) {
        assert_ends_at_zero(&read_curve_csv(&dir.path().join(&name)).unwrap());
    }
}

#[test]
fn runs_repeat_byte_for_byte() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut c = small(ExperimentKind::Multi);
    c.splits = SplitSizes {
        train: 120,
        calib: 40,
        test: 60,
    };
    let grid = GridModel::case6ww();
    let ma = run_experiment(&grid, &c, a.path()).unwrap();
    let mb = run_experiment(&grid, &c, b.path()).unwrap();
    assert_eq!(ma, mb);
    for name in files(a.path()).iter().chain(["manifest.json".to_string()].iter()) {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    let db = load_database(&a.path().join("dataset.csv")).unwrap();
    assert_eq!(db.len(), 220);
    assert_eq!(db.seed, c.seed);
}

#[test]
fn runners_do_not_touch_the_shared_pool() {
    let before = pool().clone();
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(ExperimentKind::Calibration);
    c.repetitions = 2;
    run(&c, &dir.path().join("cal"));
    run(&small(ExperimentKind::Triage), &dir.path().join("tri"));
    assert_eq!(&before, pool());
    let cal = files(&dir.path().join("cal"));
    let tri = files(&dir.path().join("tri"));
    assert!(cal.is_disjoint(&tri));
}

#[test]
fn bad_configs_are_rejected() {
    let grid = GridModel::case6ww();
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(ExperimentKind::Imbalance);
    c.lines = vec![6];
    assert!(run_on_database(&grid, &c, pool(), dir.path()).is_err());
    let mut c = small(ExperimentKind::Multi);
    c.lines = vec![3, 3];
    assert!(run_on_database(&grid, &c, pool(), dir.path()).is_err());
    assert!(ExperimentConfig::from_json(r#"{"experiment": "multi", "rounds": 3}"#).is_err());
}
