//! Platt scaling `p̂¹(s) = 1 / (1 + exp(a·s + b))`.

use serde::{Deserialize, Serialize};

use super::CalibrationError;
use crate::grid::SecurityLabel;
use crate::learner::{boost, BoostMode};

pub const NEWTON_STEP_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 100;
const RIDGE: f64 = 1e-12;
/// Calibrated probabilities stay within `[PROB_EPS, 1 - PROB_EPS]`.
const PROB_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattParams {
    pub a: f64,
    pub b: f64,
    /// Negative log-likelihood against the regularized targets.
    pub nll: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl PlattParams {
    pub fn fixed(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            nll: f64::NAN,
            iterations: 0,
            converged: true,
        }
    }

    pub fn probability(&self, score: f64) -> f64 {
        calibrated_probability(self, score)
    }
}

pub fn calibrated_probability(params: &PlattParams, score: f64) -> f64 {
    let p = 1.0 / (1.0 + (params.a * score + params.b).exp());
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// `(t⁺, t⁻) = ((N⁺+1)/(N⁺+2), 1/(N⁻+2))`.
pub fn platt_targets(n_secure: usize, n_insecure: usize) -> (f64, f64) {
    (
        (n_secure as f64 + 1.0) / (n_secure as f64 + 2.0),
        1.0 / (n_insecure as f64 + 2.0),
    )
}

/// `ln(1 + e^f)` without overflow.
fn softplus(f: f64) -> f64 {
    if f > 0.0 {
        f + (-f).exp().ln_1p()
    } else {
        f.exp().ln_1p()
    }
}

fn nll(scores: &[f64], targets: &[f64], a: f64, b: f64) -> f64 {
    scores
        .iter()
        .zip(targets)
        .map(|(&s, &t)| {
            let f = a * s + b;
            softplus(f) - (1.0 - t) * f
        })
        .sum()
}

fn newton(scores: &[f64], targets: &[f64], a0: f64, b0: f64, fit_slope: bool) -> (f64, f64, usize, bool) {
    let (mut a, mut b) = (a0, b0);
    let mut current = nll(scores, targets, a, b);
    for iter in 1..=NEWTON_MAX_ITER {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, RIDGE, 0.0, RIDGE);
        for (&s, &t) in scores.iter().zip(targets) {
            let p = 1.0 / (1.0 + (a * s + b).exp());
            let d = t - p;
            let w = p * (1.0 - p);
            ga += d * s;
            gb += d;
            haa += w * s * s;
            hab += w * s;
            hbb += w;
        }
        let (da, db) = if fit_slope {
            let det = haa * hbb - hab * hab;
            (-(hbb * ga - hab * gb) / det, -(haa * gb - hab * ga) / det)
        } else {
            (0.0, -gb / hbb)
        };
        if !(da.is_finite() && db.is_finite()) {
            return (a, b, iter, false);
        }
        // backtrack until the likelihood does not get worse
        let mut step = 1.0;
        let (mut na, mut nb, mut next);
        loop {
            na = a + step * da;
            nb = b + step * db;
            next = nll(scores, targets, na, nb);
            if next <= current + 1e-12 * current.abs().max(1.0) || step < 1e-10 {
                break;
            }
            step *= 0.5;
        }
        let moved = ((na - a).powi(2) + (nb - b).powi(2)).sqrt();
        if next <= current {
            a = na;
            b = nb;
            current = next;
        }
        if moved < NEWTON_STEP_TOL {
            return (a, b, iter, true);
        }
    }
    (a, b, NEWTON_MAX_ITER, false)
}

/// Maximum-likelihood sigmoid fit against Platt's regularized targets.
///
/// The slope is constrained to `a ≤ 0`; when the free optimum has a positive
/// slope the offset alone is refitted with `a = 0`.
pub fn fit_platt(scores: &[f64], labels: &[SecurityLabel]) -> Result<PlattParams, CalibrationError> {
    if scores.len() != labels.len() {
        return Err(CalibrationError::InvalidInput(
            "scores and labels differ in length".into(),
        ));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(CalibrationError::InvalidInput("scores must be finite".into()));
    }
    let n_secure = labels.iter().filter(|l| l.is_secure()).count();
    let n_insecure = labels.len() - n_secure;
    if n_secure == 0 || n_insecure == 0 {
        return Err(CalibrationError::SingleClassCalibration);
    }
    let (t_pos, t_neg) = platt_targets(n_secure, n_insecure);
    let targets: Vec<f64> = labels
        .iter()
        .map(|l| if l.is_secure() { t_pos } else { t_neg })
        .collect();
    let b0 = ((n_insecure as f64 + 1.0) / (n_secure as f64 + 1.0)).ln();
    let (mut a, mut b, mut iterations, mut converged) = newton(scores, &targets, 0.0, b0, true);
    if a > 0.0 {
        let (_, b1, it, conv) = newton(scores, &targets, 0.0, b0, false);
        a = 0.0;
        b = b1;
        iterations += it;
        converged = conv;
    }
    Ok(PlattParams {
        a,
        b,
        nll: nll(scores, &targets, a, b),
        iterations,
        converged,
    })
}

/// Sigmoid fit on pooled out-of-fold scores: each fold is scored by an
/// ensemble boosted on the remaining folds (`index % k` assignment).
pub fn fit_platt_cross_validated(
    x: &[Vec<f64>],
    y: &[SecurityLabel],
    rounds: usize,
    mode: BoostMode,
    k: usize,
) -> Result<PlattParams, CalibrationError> {
    if k < 2 || k > x.len() || x.len() != y.len() {
        return Err(CalibrationError::InvalidInput(format!(
            "k must be in 2..={}, got {k}",
            x.len()
        )));
    }
    let mut scores = vec![0.0; x.len()];
    for fold in 0..k {
        let (mut xt, mut yt) = (Vec::new(), Vec::new());
        for i in (0..x.len()).filter(|i| i % k != fold) {
            xt.push(x[i].clone());
            yt.push(y[i]);
        }
        let model = boost(&xt, &yt, rounds, mode)?;
        for i in (0..x.len()).filter(|i| i % k == fold) {
            scores[i] = model.score(&x[i]);
        }
    }
    fit_platt(&scores, y)
}
