//! Boosted stump ensembles (discrete SAMME and real-valued SAMME.R) with
//! k-fold selection of the number of rounds.

use serde::{Deserialize, Serialize};

use super::stump::{train_stump_sorted, SortedFeatures, Stump};
use super::LearnerError;
use crate::grid::SecurityLabel;

/// Error rate below which a discrete stump is treated as perfect.
const PERFECT_ERR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum BoostMode {
    #[default]
    #[serde(rename = "samme.r")]
    SammeR,
    #[serde(rename = "samme")]
    Samme,
}

impl BoostMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "samme.r" | "sammer" | "samme_r" => Some(BoostMode::SammeR),
            "samme" => Some(BoostMode::Samme),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BoostMode::SammeR => "samme.r",
            BoostMode::Samme => "samme",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub rounds: usize,
    pub mode: BoostMode,
    pub k_folds: usize,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            rounds: 100,
            mode: BoostMode::SammeR,
            k_folds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub mode: BoostMode,
    pub stumps: Vec<Stump>,
    /// Vote weights; all ones in SAMME.R mode.
    pub weights: Vec<f64>,
}

/// Mean held-out error per round count, and the selected count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub mean_error: Vec<f64>,
    pub selected_rounds: usize,
}

fn signed(label: SecurityLabel) -> f64 {
    if label.is_secure() {
        1.0
    } else {
        -1.0
    }
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.stumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stumps.is_empty()
    }

    pub fn truncated(&self, rounds: usize) -> Ensemble {
        let k = rounds.clamp(1, self.stumps.len());
        Ensemble {
            mode: self.mode,
            stumps: self.stumps[..k].to_vec(),
            weights: self.weights[..k].to_vec(),
        }
    }

    /// Additive margin `F(x) = Σ ½(ln p¹ − ln p⁰)` (SAMME.R mode).
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.stumps.iter().map(|s| s.leaf(x).half_log_odds()).sum()
    }

    fn secure_weight_fraction(&self, x: &[f64]) -> f64 {
        let total: f64 = self.weights.iter().sum();
        let secure: f64 = self
            .stumps
            .iter()
            .zip(&self.weights)
            .filter(|(s, _)| s.predict(x).is_secure())
            .map(|(_, w)| w)
            .sum();
        if total > 0.0 {
            secure / total
        } else {
            0.5
        }
    }

    /// Score `s¹(x) ∈ [0, 1]`; `vote(x)` is secure exactly when this is `≥ 0.5`.
    pub fn score(&self, x: &[f64]) -> f64 {
        match self.mode {
            BoostMode::Samme => self.secure_weight_fraction(x),
            BoostMode::SammeR => {
                let f = self.margin(x);
                squash(f, self.stumps.len())
            }
        }
    }

    pub fn vote(&self, x: &[f64]) -> SecurityLabel {
        match self.mode {
            BoostMode::Samme => SecurityLabel::from_secure(self.secure_weight_fraction(x) >= 0.5),
            BoostMode::SammeR => SecurityLabel::from_secure(self.margin(x) >= 0.0),
        }
    }

    /// Votes after each round `1..=len`.
    pub fn staged_votes(&self, x: &[f64]) -> Vec<SecurityLabel> {
        let mut out = Vec::with_capacity(self.stumps.len());
        let (mut acc, mut total) = (0.0, 0.0);
        for (s, w) in self.stumps.iter().zip(&self.weights) {
            match self.mode {
                BoostMode::SammeR => {
                    acc += s.leaf(x).half_log_odds();
                    out.push(SecurityLabel::from_secure(acc >= 0.0));
                }
                BoostMode::Samme => {
                    total += w;
                    if s.predict(x).is_secure() {
                        acc += w;
                    }
                    let frac = if total > 0.0 { acc / total } else { 0.5 };
                    out.push(SecurityLabel::from_secure(frac >= 0.5));
                }
            }
        }
        out
    }
}

/// Logistic of the round-normalized margin, kept on the same side of ½ as `F`.
fn squash(f: f64, rounds: usize) -> f64 {
    let s = logistic(2.0 * f / rounds.max(1) as f64);
    if f >= 0.0 {
        s.max(0.5)
    } else {
        s.min(0.5f64.next_down())
    }
}

fn validate(x: &[Vec<f64>], y: &[SecurityLabel], rounds: usize) -> Result<(), LearnerError> {
    if rounds == 0 {
        return Err(LearnerError::InvalidInput(
            "at least one boosting round is required".into(),
        ));
    }
    if x.len() != y.len() || x.is_empty() {
        return Err(LearnerError::InvalidInput(
            "examples and labels must be non-empty and aligned".into(),
        ));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(LearnerError::InvalidInput("ragged feature matrix".into()));
    }
    let secure = y.iter().filter(|l| l.is_secure()).count();
    if secure == 0 || secure == y.len() {
        return Err(LearnerError::SingleClassData);
    }
    Ok(())
}

/// Runs up to `rounds` boosting rounds on the full data.
pub fn boost(x: &[Vec<f64>], y: &[SecurityLabel], rounds: usize, mode: BoostMode) -> Result<Ensemble, LearnerError> {
    validate(x, y, rounds)?;
    let sorted = SortedFeatures::new(x);
    let n = x.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut stumps = Vec::with_capacity(rounds);
    let mut weights = Vec::with_capacity(rounds);

    for _ in 0..rounds {
        let stump = train_stump_sorted(x, y, &w, &sorted)?;
        match mode {
            BoostMode::SammeR => {
                for i in 0..n {
                    let f = stump.leaf(&x[i]).half_log_odds();
                    w[i] *= (-signed(y[i]) * f).exp();
                }
                stumps.push(stump);
                weights.push(1.0);
            }
            BoostMode::Samme => {
                let total: f64 = w.iter().sum();
                let miss: Vec<bool> = (0..n).map(|i| stump.predict(&x[i]) != y[i]).collect();
                let err: f64 = (0..n).filter(|&i| miss[i]).map(|i| w[i]).sum::<f64>() / total;
                if err >= 0.5 {
                    if stumps.is_empty() {
                        stumps.push(stump);
                        weights.push(1.0);
                    }
                    break;
                }
                let clamped = err.max(PERFECT_ERR);
                let alpha = ((1.0 - clamped) / clamped).ln();
                stumps.push(stump);
                weights.push(alpha);
                if err < PERFECT_ERR {
                    break;
                }
                for i in 0..n {
                    if miss[i] {
                        w[i] *= alpha.exp();
                    }
                }
            }
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            break;
        }
        w.iter_mut().for_each(|v| *v /= total);
    }
    Ok(Ensemble { mode, stumps, weights })
}

fn staged_errors(ensemble: &Ensemble, x: &[Vec<f64>], y: &[SecurityLabel], rounds: usize) -> Vec<f64> {
    let mut errors = vec![0.0; rounds];
    for (xi, &yi) in x.iter().zip(y) {
        let staged = ensemble.staged_votes(xi);
        for (m, e) in errors.iter_mut().enumerate() {
            let vote = staged[m.min(staged.len() - 1)];
            if vote != yi {
                *e += 1.0;
            }
        }
    }
    errors.iter_mut().for_each(|e| *e /= x.len() as f64);
    errors
}

/// Boosting with the round count chosen by k-fold cross-validation.
///
/// Fold `f` holds the examples with `index % k == f`. The count with the
/// lowest mean held-out error wins; ties go to fewer rounds.
pub fn train_adaboost(
    x: &[Vec<f64>],
    y: &[SecurityLabel],
    config: &BoostConfig,
) -> Result<(Ensemble, CvReport), LearnerError> {
    validate(x, y, config.rounds)?;
    let k = config.k_folds;
    if k < 2 || k > x.len() {
        return Err(LearnerError::InvalidInput(format!(
            "k_folds must be in 2..={}, got {k}",
            x.len()
        )));
    }
    let rounds = config.rounds;
    let mut mean_error = vec![0.0; rounds];
    for fold in 0..k {
        let (mut xt, mut yt, mut xv, mut yv) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for i in 0..x.len() {
            if i % k == fold {
                xv.push(x[i].clone());
                yv.push(y[i]);
            } else {
                xt.push(x[i].clone());
                yt.push(y[i]);
            }
        }
        let model = boost(&xt, &yt, rounds, config.mode)?;
        for (m, e) in staged_errors(&model, &xv, &yv, rounds).into_iter().enumerate() {
            mean_error[m] += e / k as f64;
        }
    }
    let mut selected = 0;
    for m in 1..rounds {
        if mean_error[m] < mean_error[selected] - 1e-15 {
            selected = m;
        }
    }
    let full = boost(x, y, rounds, config.mode)?;
    let ensemble = full.truncated(selected + 1);
    Ok((
        ensemble,
        CvReport {
            mean_error,
            selected_rounds: selected + 1,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::super::stump::Leaf;
    use super::*;
    use rand::{Rng, SeedableRng};
    use SecurityLabel::{Insecure, Secure};

    fn vote_stump(feature: usize, left: SecurityLabel) -> Stump {
        let (l, r) = if left.is_secure() { (0.0, 1.0) } else { (1.0, 0.0) };
        Stump {
            feature,
            threshold: 0.5,
            left: Leaf::from_weights(l, 1.0 - l),
            right: Leaf::from_weights(r, 1.0 - r),
        }
    }

    #[test]
    fn weighted_vote_rule() {
        let e = Ensemble {
            mode: BoostMode::Samme,
            stumps: vec![vote_stump(0, Secure), vote_stump(0, Insecure)],
            weights: vec![0.7, 0.3],
        };
        assert_eq!(e.vote(&[0.0]), Secure);
        assert!((e.score(&[0.0]) - 0.7).abs() < 1e-15);
        let all_zero = Ensemble {
            mode: BoostMode::Samme,
            stumps: vec![vote_stump(0, Insecure), vote_stump(0, Insecure)],
            weights: vec![0.4, 0.6],
        };
        assert_eq!(all_zero.vote(&[0.0]), Insecure);
        assert_eq!(all_zero.score(&[0.0]), 0.0);
        let unanimous = Ensemble {
            mode: BoostMode::Samme,
            stumps: vec![vote_stump(0, Secure), vote_stump(0, Secure)],
            weights: vec![0.4, 0.6],
        };
        assert_eq!(unanimous.score(&[0.0]), 1.0);
    }

    #[test]
    fn real_margin_single_stump() {
        let leaf = Leaf::from_weights(0.1, 0.9);
        let e = Ensemble {
            mode: BoostMode::SammeR,
            stumps: vec![Stump::constant(leaf)],
            weights: vec![1.0],
        };
        let f = e.margin(&[0.0]);
        assert!((f - 0.5 * 9f64.ln()).abs() < 1e-12);
        assert_eq!(e.vote(&[0.0]), Secure);
        // logistic(2F) = 0.9 for a single round
        assert!((e.score(&[0.0]) - 0.9).abs() < 1e-12);
        let flat = Ensemble {
            mode: BoostMode::SammeR,
            stumps: vec![Stump::constant(Leaf::from_weights(1.0, 1.0))],
            weights: vec![1.0],
        };
        assert_eq!(flat.score(&[0.0]), 0.5);
    }

    #[test]
    fn separable_data_needs_one_round() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<SecurityLabel> = (0..20).map(|i| SecurityLabel::from_secure(i >= 10)).collect();
        for mode in [BoostMode::SammeR, BoostMode::Samme] {
            let config = BoostConfig {
                rounds: 10,
                mode,
                k_folds: 3,
            };
            let (e, cv) = train_adaboost(&x, &y, &config).unwrap();
            assert_eq!(cv.selected_rounds, 1);
            assert_eq!(e.len(), 1);
            assert!(x.iter().zip(&y).all(|(xi, &yi)| e.vote(xi) == yi));
        }
    }

    #[test]
    fn single_round_equals_stump() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let x: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.random(), rng.random()]).collect();
        let y: Vec<SecurityLabel> = x
            .iter()
            .map(|r| SecurityLabel::from_secure(r[0] + 0.3 * r[1] > 0.6))
            .collect();
        let stump = super::super::train_stump(&x, &y, &vec![1.0; 60]).unwrap();
        for mode in [BoostMode::SammeR, BoostMode::Samme] {
            let e = boost(&x, &y, 1, mode).unwrap();
            assert_eq!(e.len(), 1);
            assert!(x.iter().all(|xi| e.vote(xi) == stump.predict(xi)));
        }
    }

    /// `Σ_i exp(−½ Σ_l α_l y_i h_l(x_i))` after each round, recomputed from scratch.
    fn discrete_exp_loss(e: &Ensemble, x: &[Vec<f64>], y: &[SecurityLabel]) -> Vec<f64> {
        (1..=e.len())
            .map(|m| {
                x.iter()
                    .zip(y)
                    .map(|(xi, &yi)| {
                        let margin: f64 = (0..m)
                            .map(|l| e.weights[l] * signed(yi) * signed(e.stumps[l].predict(xi)))
                            .sum();
                        (-0.5 * margin).exp()
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn discrete_exponential_loss_does_not_increase() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100);
        let x: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.random(), rng.random()]).collect();
        let y: Vec<SecurityLabel> = x
            .iter()
            .map(|r| SecurityLabel::from_secure((r[0] - 0.5).powi(2) + (r[1] - 0.5).powi(2) < 0.12))
            .collect();
        let e = boost(&x, &y, 30, BoostMode::Samme).unwrap();
        assert!(e.len() > 3);
        assert!(e.weights.iter().all(|&w| w > 0.0));
        let loss = discrete_exp_loss(&e, &x, &y);
        assert!(loss[0] < 100.0);
        for pair in loss.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "{loss:?}");
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            boost(&x, &[Secure, Secure], 5, BoostMode::SammeR),
            Err(LearnerError::SingleClassData)
        ));
        let config = BoostConfig {
            rounds: 5,
            mode: BoostMode::Samme,
            k_folds: 1,
        };
        assert!(train_adaboost(&x, &[Secure, Insecure], &config).is_err());
    }
}
