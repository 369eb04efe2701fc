//! Cost ratios, adjusted priors, decision thresholds and per-prediction risks.

use super::{ContingencyParams, RiskError};
use crate::grid::SecurityLabel;

pub fn cost_ratio(c_f1: f64, c_f0: f64) -> Result<f64, RiskError> {
    if !(c_f1 > 0.0 && c_f0 > 0.0) {
        return Err(RiskError::NonPositiveCost);
    }
    Ok(c_f1 / (c_f1 + c_f0))
}

/// Class distribution after weighting insecure examples by `ratio` and
/// secure ones by `1 − ratio`; returns `(π̂⁰, π̂¹)`.
pub fn adjusted_priors(ratio: f64, n_insecure: usize, n_secure: usize) -> Result<(f64, f64), RiskError> {
    if n_insecure + n_secure == 0 {
        return Err(RiskError::EmptyDatabase);
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(RiskError::InvalidCostRatio(ratio));
    }
    let w0 = ratio * n_insecure as f64;
    let w1 = (1.0 - ratio) * n_secure as f64;
    let p0 = w0 / (w0 + w1);
    Ok((p0, 1.0 - p0))
}

/// `z = C^F1·p / (C^F1·p + C^F0·(1 − p))`.
pub fn decision_threshold(params: &ContingencyParams) -> f64 {
    let miss = params.c_f1 * params.p_c;
    miss / (miss + params.c_f0 * (1.0 - params.p_c))
}

/// `(R¹, R⁰)`: risks of predicting secure and insecure.
pub fn prediction_risks(p_hat: f64, params: &ContingencyParams) -> (f64, f64) {
    (
        params.c_f1 * params.p_c * (1.0 - p_hat),
        params.c_f0 * (1.0 - params.p_c) * p_hat,
    )
}

/// Secure iff `p̂¹ > z`; the residual risk is the risk of the chosen label.
pub fn risk_optimal_predict(p_hat: f64, params: &ContingencyParams) -> (SecurityLabel, f64) {
    let (r1, r0) = prediction_risks(p_hat, params);
    if p_hat > decision_threshold(params) {
        (SecurityLabel::Secure, r1)
    } else {
        (SecurityLabel::Insecure, r0)
    }
}

pub fn ml_severity(p_hat: f64, c_f1: f64) -> f64 {
    c_f1 * (1.0 - p_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn params(p: f64, c1: f64, c0: f64) -> ContingencyParams {
        ContingencyParams::new(3, p, c1, c0).unwrap()
    }

    #[test]
    fn cost_ratio_examples() {
        assert_eq!(cost_ratio(2.0, 2.0).unwrap(), 0.5);
        assert_eq!(cost_ratio(500.0, 1.0).unwrap(), 500.0 / 501.0);
        assert_eq!(cost_ratio(3.0, 1.0).unwrap(), 0.75);
        assert!(cost_ratio(0.0, 1.0).is_err());
    }

    #[test]
    fn adjusted_prior_examples() {
        assert_eq!(adjusted_priors(0.5, 30, 70).unwrap().0, 0.3);
        assert!((adjusted_priors(0.75, 40, 40).unwrap().0 - 0.75).abs() < 1e-15);
        assert_eq!(adjusted_priors(0.75, 0, 10).unwrap(), (0.0, 1.0));
        assert!(matches!(adjusted_priors(0.5, 0, 0), Err(RiskError::EmptyDatabase)));
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(decision_threshold(&params(0.5, 1.0, 1.0)), 0.5);
        let z = decision_threshold(&params(0.0002, 10000.0, 1.0));
        assert!((z - 2.0 / 2.9998).abs() < 1e-12);
        assert!((z - 0.66671).abs() < 1e-5);
        assert!(decision_threshold(&params(1e-300, 1.0, 1.0)) < 1e-299);
    }

    #[test]
    fn risk_examples() {
        let p = params(0.0002, 10000.0, 1.0);
        let (r1, r0) = prediction_risks(0.9, &p);
        assert!((r1 - 0.2).abs() < 1e-12);
        assert!((r0 - 0.89982).abs() < 1e-12);
        assert_eq!(prediction_risks(1.0, &p).0, 0.0);
        assert_eq!(prediction_risks(0.0, &p).1, 0.0);
        assert_eq!(ml_severity(1.0, 10000.0), 0.0);
        assert_eq!(ml_severity(0.0, 10000.0), 10000.0);
        assert_eq!(ml_severity(0.75, 10000.0), 2500.0);
    }

    #[test]
    fn boundary_predicts_insecure() {
        let p = params(0.5, 1.0, 1.0);
        assert_eq!(
            risk_optimal_predict(0.5, &p),
            (SecurityLabel::Insecure, prediction_risks(0.5, &p).1)
        );
        assert_eq!(risk_optimal_predict(0.6, &p).0, SecurityLabel::Secure);
    }

    #[test]
    fn label_matches_argmin_of_risks() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000);
        for _ in 0..1000 {
            let p = params(
                rng.random_range(1e-6..0.999),
                rng.random_range(0.01..100.0),
                rng.random_range(0.01..100.0),
            );
            let q: f64 = rng.random();
            let (r1, r0) = (p.c_f1 * p.p_c * (1.0 - q), p.c_f0 * (1.0 - p.p_c) * q);
            let (label, risk) = risk_optimal_predict(q, &p);
            if (r1 - r0).abs() > 1e-12 * r1.max(r0) {
                assert_eq!(label.is_secure(), r1 < r0);
                assert_eq!(risk, r1.min(r0));
            }
        }
    }
}
