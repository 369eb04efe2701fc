//! Strategies and invariant checks shared by the property suite and the
//! acceptance report.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use riskgate::calibration::{brier_score, calibrated_probability, fit_platt, PlattParams};
use riskgate::grid::{GridModel, SecurityLabel};
use riskgate::learner::{boost, train_stump, BoostMode};
use riskgate::risk_engine::{
    budget_sweep, no_ml_order, rank_from_probabilities, residual_curve, triage, uniform_condition_probabilities,
    ContingencyParams, OrderedPrediction, Scenario,
};
use riskgate::scenario_gen::{build_database, GenerationConfig, SplitSizes};

pub type Points = (Vec<Vec<f64>>, Vec<SecurityLabel>);

fn label(b: bool) -> SecurityLabel {
    SecurityLabel::from_secure(b)
}

/// Two-feature data with both classes present.
pub fn points() -> impl Strategy<Value = Points> {
    prop::collection::vec((0.0..10.0f64, 0.0..10.0f64, any::<bool>()), 6..40).prop_map(|rows| {
        let x: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.0, r.1]).collect();
        let mut y: Vec<SecurityLabel> = rows.iter().map(|r| label(r.2)).collect();
        y[0] = SecurityLabel::Secure;
        y[1] = SecurityLabel::Insecure;
        (x, y)
    })
}

pub fn mode() -> impl Strategy<Value = BoostMode> {
    prop_oneof![Just(BoostMode::SammeR), Just(BoostMode::Samme)]
}

pub fn params(line: u32) -> impl Strategy<Value = ContingencyParams> {
    (1e-6..0.5f64, 0.01..100.0f64, 0.01..100.0f64)
        .prop_map(move |(p, c1, c0)| ContingencyParams::new(line, p, c1, c0).expect("valid draw"))
}

/// `k` contingencies over `n` conditions with estimates and true labels.
pub fn triage_case() -> impl Strategy<Value = (Vec<ContingencyParams>, Vec<Vec<f64>>, Vec<Vec<bool>>)> {
    (1usize..4, 1usize..25).prop_flat_map(|(k, n)| {
        let ps: Vec<_> = (0..k).map(|c| params(c as u32 + 1)).collect();
        (
            ps,
            prop::collection::vec(prop::collection::vec(0.0..=1.0f64, n), k),
            prop::collection::vec(prop::collection::vec(any::<bool>(), n), k),
        )
    })
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg.into()))
    }
}

pub fn score_vote_consistency(
    data: &Points,
    rounds: usize,
    mode: BoostMode,
    probes: &[(f64, f64)],
) -> Result<(), TestCaseError> {
    let (x, y) = data;
    let e = boost(x, y, rounds, mode).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for p in x.iter().cloned().chain(probes.iter().map(|&(a, b)| vec![a, b])) {
        let s = e.score(&p);
        ensure((0.0..=1.0).contains(&s), format!("score {s} outside [0, 1]"))?;
        ensure(
            e.vote(&p).is_secure() == (s >= 0.5),
            format!("vote disagrees with score {s}"),
        )?;
        // two-class closure
        let s0 = 1.0 - s;
        ensure((s + s0 - 1.0).abs() < 1e-15, "s1 + s0 != 1")?;
    }
    Ok(())
}

pub fn stump_permutation_invariance(data: &Points, seed: u64) -> Result<(), TestCaseError> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let (x, y) = data;
    let n = x.len();
    let w = vec![1.0 / n as f64; n];
    let a = train_stump(x, y, &w).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    let xp: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
    let yp: Vec<SecurityLabel> = idx.iter().map(|&i| y[i]).collect();
    let b = train_stump(&xp, &yp, &w).map_err(|e| TestCaseError::fail(e.to_string()))?;
    ensure(
        a.feature == b.feature && a.threshold == b.threshold,
        "split changed under permutation",
    )?;
    for p in x {
        ensure(a.predict(p) == b.predict(p), "prediction changed under permutation")?;
    }
    Ok(())
}

pub fn platt_monotone_and_closed(scores: &[f64], labels: &[bool], a: f64, b: f64) -> Result<(), TestCaseError> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let fixed = PlattParams::fixed(a, b);
    let probs: Vec<f64> = sorted.iter().map(|&s| calibrated_probability(&fixed, s)).collect();
    for w in probs.windows(2) {
        ensure(w[0] <= w[1], "calibrated probability decreased in the score")?;
    }
    ensure(probs.iter().all(|&p| p > 0.0 && p < 1.0), "probability outside (0, 1)")?;
    let y: Vec<SecurityLabel> = labels.iter().map(|&l| label(l)).collect();
    if y.iter().any(|l| l.is_secure()) && y.iter().any(|l| !l.is_secure()) {
        let fit = fit_platt(scores, &y).map_err(|e| TestCaseError::fail(e.to_string()))?;
        ensure(fit.a <= 0.0, format!("fitted slope {} > 0", fit.a))?;
        for &s in scores {
            let p = fit.probability(s);
            ensure(p > 0.0 && p < 1.0, "fitted probability outside (0, 1)")?;
        }
    }
    Ok(())
}

pub fn brier_permutation_invariance(
    values: &[f64],
    labels: &[bool],
    bins: usize,
    seed: u64,
) -> Result<(), TestCaseError> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let y: Vec<SecurityLabel> = labels.iter().map(|&l| label(l)).collect();
    let bins = bins.clamp(1, values.len());
    let a = brier_score(values, &y, bins).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    let v: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    let l: Vec<SecurityLabel> = idx.iter().map(|&i| y[i]).collect();
    let b = brier_score(&v, &l, bins).map_err(|e| TestCaseError::fail(e.to_string()))?;
    ensure(
        a.brier == b.brier,
        format!("Brier {} != {} after permutation", a.brier, b.brier),
    )?;
    ensure((0.0..=1.0).contains(&a.brier), "Brier outside [0, 1]")
}

fn ranked(params: &[ContingencyParams], p_hat: &[Vec<f64>]) -> Vec<Scenario> {
    let n = p_hat[0].len();
    let ids: Vec<u64> = (0..n as u64).collect();
    rank_from_probabilities(&ids, &uniform_condition_probabilities(n), params, p_hat).expect("aligned inputs")
}

fn truth_of(params: &[ContingencyParams], truth: &[Vec<bool>], s: &Scenario) -> SecurityLabel {
    let k = params
        .iter()
        .position(|p| p.line_id == s.contingency)
        .expect("known line");
    label(truth[k][s.condition as usize])
}

pub fn z_monotone(params: &[ContingencyParams], p_hat: &[Vec<f64>], truth: &[Vec<bool>]) -> Result<(), TestCaseError> {
    let n = p_hat[0].len();
    let order = OrderedPrediction::from_ranked(&ranked(params, p_hat), |s| truth_of(params, truth, s));
    let sweep = budget_sweep(order.len());
    let curve = residual_curve(&order, params, n, &sweep).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for w in curve.windows(2) {
        ensure(
            w[1].z <= w[0].z,
            format!("Z rose from {} to {} at S = {}", w[0].z, w[1].z, w[1].budget),
        )?;
        ensure(w[1].errors() <= w[0].errors(), "error count rose")?;
    }
    let last = curve.last().expect("non-empty sweep");
    ensure(
        last.z == 0.0 && last.errors() == 0,
        "full verification leaves residual risk",
    )
}

pub fn risk_endpoints(
    params: &[ContingencyParams],
    p_hat: &[Vec<f64>],
    truth: &[Vec<bool>],
) -> Result<(), TestCaseError> {
    let n = p_hat[0].len();
    let r = ranked(params, p_hat);
    let total = r.len();
    let oracle = |s: &Scenario| Ok::<_, String>(truth_of(params, truth, s));
    let no_truth: Option<fn(&Scenario) -> SecurityLabel> = None;

    // independent sums
    let mut ml = 0.0;
    let mut sa = 0.0;
    for (k, p) in params.iter().enumerate() {
        for i in 0..n {
            let q = p_hat[k][i];
            let r1 = p.c_f1 * p.p_c * (1.0 - q);
            let r0 = p.c_f0 * (1.0 - p.p_c) * q;
            ml += r1.min(r0) / n as f64;
            if !truth[k][i] {
                sa += p.p_c / n as f64 * p.c_f1;
            }
        }
    }
    let tol = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);

    let zero = triage(r.clone(), 0, params, oracle, no_truth, n).map_err(|e| TestCaseError::fail(e.to_string()))?;
    ensure(
        zero.risk_sa == 0.0 && zero.risk_tot == zero.risk_ml,
        "S = 0 must give RISK_TOT = RISK_ML",
    )?;
    ensure(tol(zero.risk_ml, ml), format!("RISK_ML {} vs {}", zero.risk_ml, ml))?;
    ensure(zero.cvm == 0.0, "CVM at S = 0")?;

    let full = triage(r, total, params, oracle, no_truth, n).map_err(|e| TestCaseError::fail(e.to_string()))?;
    ensure(
        full.risk_ml == 0.0 && full.risk_tot == full.risk_sa,
        "S = |scenarios| must give RISK_TOT = RISK_SA",
    )?;
    ensure(tol(full.risk_sa, sa), format!("RISK_SA {} vs {}", full.risk_sa, sa))?;
    ensure(full.cvm == 1.0, "CVM at full budget")
}

/// Generation, boosting and baseline ordering repeat exactly under a seed.
pub fn determinism(seed: u64) -> Result<(), TestCaseError> {
    let grid = GridModel::case6ww();
    let config = GenerationConfig::new(
        seed,
        SplitSizes {
            train: 30,
            calib: 10,
            test: 20,
        },
        vec![3, 5],
    );
    let a = build_database(&grid, &config).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let b = build_database(&grid, &config).map_err(|e| TestCaseError::fail(e.to_string()))?;
    ensure(a == b, "database differs between runs")?;
    let (x, y) = a.split_data(riskgate::scenario_gen::Split::Train, 5).unwrap();
    if y.iter().any(|l| l.is_secure()) && y.iter().any(|l| !l.is_secure()) {
        let e1 = boost(&x, &y, 10, BoostMode::SammeR).unwrap();
        let e2 = boost(&x, &y, 10, BoostMode::SammeR).unwrap();
        ensure(e1 == e2, "ensemble differs between runs")?;
    }
    let scen: Vec<_> = y.iter().map(|&l| (5u32, l)).collect();
    let maj = [(5u32, SecurityLabel::Secure)].into_iter().collect();
    ensure(
        no_ml_order(&scen, &maj, seed).unwrap() == no_ml_order(&scen, &maj, seed).unwrap(),
        "baseline order differs between runs",
    )
}

/// Runs `test` over `cases` draws of `strategy`; `Err` carries the minimal failure.
pub fn run_property<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    runner.run(&strategy, test).map_err(|e| e.to_string())
}
