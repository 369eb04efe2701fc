//! Weighted gini splits and depth-one trees.

use serde::{Deserialize, Serialize};

use super::{LearnerError, LEAF_EPS};
use crate::grid::SecurityLabel;

/// Class probabilities of one leaf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub p0: f64,
    pub p1: f64,
    pub label: SecurityLabel,
}

impl Leaf {
    /// Leaf from class weights, clamped to `[ε, 1-ε]`.
    pub fn from_weights(w0: f64, w1: f64) -> Self {
        let total = w0 + w1;
        let raw = if total > 0.0 { w1 / total } else { 0.5 };
        let p1 = raw.clamp(LEAF_EPS, 1.0 - LEAF_EPS);
        Leaf {
            p0: 1.0 - p1,
            p1,
            label: SecurityLabel::from_secure(p1 >= 0.5),
        }
    }

    /// Half log-odds `½·(ln p¹ − ln p⁰)`.
    pub fn half_log_odds(&self) -> f64 {
        0.5 * (self.p1.ln() - self.p0.ln())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    /// Leaf for `x[feature] <= threshold`.
    pub left: Leaf,
    pub right: Leaf,
}

impl Stump {
    pub fn constant(leaf: Leaf) -> Self {
        Stump {
            feature: 0,
            threshold: 0.0,
            left: leaf,
            right: leaf,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.left == self.right
    }

    pub fn leaf(&self, x: &[f64]) -> &Leaf {
        if self.is_constant() || x[self.feature] <= self.threshold {
            &self.left
        } else {
            &self.right
        }
    }

    pub fn predict(&self, x: &[f64]) -> SecurityLabel {
        self.leaf(x).label
    }
}

/// Example order per feature, ascending by value (ties by example index).
#[derive(Debug, Clone)]
pub struct SortedFeatures {
    order: Vec<Vec<usize>>,
}

impl SortedFeatures {
    pub fn new(x: &[Vec<f64>]) -> Self {
        let d = x.first().map(Vec::len).unwrap_or(0);
        let order = (0..d)
            .map(|f| {
                let mut idx: Vec<usize> = (0..x.len()).collect();
                idx.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { order }
    }

    pub fn features(&self) -> usize {
        self.order.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted impurity `Σ_side W_side · gini_side`.
    pub impurity: f64,
    pub left: (f64, f64),
    pub right: (f64, f64),
}

pub(crate) fn weighted_gini(w0: f64, w1: f64) -> f64 {
    let total = w0 + w1;
    if total <= 0.0 {
        0.0
    } else {
        total - (w0 * w0 + w1 * w1) / total
    }
}

/// Best axis-aligned split over the examples with `member[i]` set.
///
/// Thresholds are midpoints between consecutive distinct values. Near-ties
/// keep the lexicographically smallest `(feature, threshold)`.
pub(crate) fn best_split(
    x: &[Vec<f64>],
    y: &[SecurityLabel],
    w: &[f64],
    sorted: &SortedFeatures,
    member: Option<&[bool]>,
) -> Option<SplitCandidate> {
    let inside = |i: usize| member.is_none_or(|m| m[i]);
    let (mut t0, mut t1) = (0.0, 0.0);
    for i in (0..x.len()).filter(|&i| inside(i)) {
        match y[i] {
            SecurityLabel::Insecure => t0 += w[i],
            SecurityLabel::Secure => t1 += w[i],
        }
    }
    let tie_tol = 1e-12 * (t0 + t1).max(f64::MIN_POSITIVE);
    let mut best: Option<SplitCandidate> = None;
    for f in 0..sorted.features() {
        let (mut l0, mut l1) = (0.0, 0.0);
        let order: Vec<usize> = sorted.order[f].iter().copied().filter(|&i| inside(i)).collect();
        for k in 0..order.len().saturating_sub(1) {
            let i = order[k];
            match y[i] {
                SecurityLabel::Insecure => l0 += w[i],
                SecurityLabel::Secure => l1 += w[i],
            }
            let v = x[i][f];
            let next = x[order[k + 1]][f];
            if next <= v {
                continue;
            }
            let (r0, r1) = (t0 - l0, t1 - l1);
            let impurity = weighted_gini(l0, l1) + weighted_gini(r0.max(0.0), r1.max(0.0));
            let better = match &best {
                None => true,
                Some(b) => impurity < b.impurity - tie_tol,
            };
            if better {
                let mut threshold = 0.5 * (v + next);
                if threshold >= next {
                    threshold = v;
                }
                best = Some(SplitCandidate {
                    feature: f,
                    threshold,
                    impurity,
                    left: (l0, l1),
                    right: (r0.max(0.0), r1.max(0.0)),
                });
            }
        }
    }
    best
}

/// Depth-one weighted gini tree with clamped leaf probabilities.
pub fn train_stump(x: &[Vec<f64>], y: &[SecurityLabel], weights: &[f64]) -> Result<Stump, LearnerError> {
    let sorted = SortedFeatures::new(x);
    train_stump_sorted(x, y, weights, &sorted)
}

pub(crate) fn train_stump_sorted(
    x: &[Vec<f64>],
    y: &[SecurityLabel],
    weights: &[f64],
    sorted: &SortedFeatures,
) -> Result<Stump, LearnerError> {
    if x.len() != y.len() || x.len() != weights.len() {
        return Err(LearnerError::InvalidInput(
            "examples, labels and weights differ in length".into(),
        ));
    }
    if x.is_empty() {
        return Err(LearnerError::InvalidInput("no examples".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().all(|&w| w == 0.0) {
        return Err(LearnerError::InvalidInput(
            "weights must be non-negative and not all zero".into(),
        ));
    }
    let (mut w0, mut w1) = (0.0, 0.0);
    for (label, w) in y.iter().zip(weights) {
        match label {
            SecurityLabel::Insecure => w0 += w,
            SecurityLabel::Secure => w1 += w,
        }
    }
    if w0 == 0.0 || w1 == 0.0 {
        return Ok(Stump::constant(Leaf::from_weights(w0, w1)));
    }
    let split = best_split(x, y, weights, sorted, None).ok_or(LearnerError::DegenerateData)?;
    Ok(Stump {
        feature: split.feature,
        threshold: split.threshold,
        left: Leaf::from_weights(split.left.0, split.left.1),
        right: Leaf::from_weights(split.right.0, split.right.1),
    })
}
