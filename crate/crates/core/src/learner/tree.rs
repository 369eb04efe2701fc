//! Greedy gini tree of bounded depth, used as the standard-classifier baseline.

use serde::{Deserialize, Serialize};

use super::stump::{best_split, weighted_gini, SortedFeatures};
use super::LearnerError;
use crate::grid::SecurityLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        label: SecurityLabel,
        /// Secure fraction among the training examples reaching the leaf.
        p1: f64,
        count: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleTree {
    pub root: TreeNode,
    pub max_depth: usize,
}

impl SingleTree {
    pub fn depth(&self) -> usize {
        fn walk(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }

    pub fn predict(&self, x: &[f64]) -> SecurityLabel {
        self.leaf(x).0
    }

    /// `(label, p1)` of the leaf reached by `x`.
    pub fn leaf(&self, x: &[f64]) -> (SecurityLabel, f64) {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label, p1, .. } => return (*label, *p1),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }
}

pub fn tree_predict(tree: &SingleTree, x: &[f64]) -> SecurityLabel {
    tree.predict(x)
}

/// CART to depth `max_depth` with unit example weights.
pub fn train_single_tree(x: &[Vec<f64>], y: &[SecurityLabel], max_depth: usize) -> Result<SingleTree, LearnerError> {
    if x.len() != y.len() || x.is_empty() {
        return Err(LearnerError::InvalidInput(
            "examples and labels must be non-empty and aligned".into(),
        ));
    }
    let secure = y.iter().filter(|l| l.is_secure()).count();
    if secure == 0 || secure == y.len() {
        return Err(LearnerError::SingleClassData);
    }
    let sorted = SortedFeatures::new(x);
    let w = vec![1.0; x.len()];
    let member = vec![true; x.len()];
    let root = grow(x, y, &w, &sorted, member, max_depth);
    Ok(SingleTree { root, max_depth })
}

fn grow(
    x: &[Vec<f64>],
    y: &[SecurityLabel],
    w: &[f64],
    sorted: &SortedFeatures,
    member: Vec<bool>,
    depth_left: usize,
) -> TreeNode {
    let (mut n0, mut n1) = (0.0, 0.0);
    for i in (0..x.len()).filter(|&i| member[i]) {
        if y[i].is_secure() {
            n1 += w[i];
        } else {
            n0 += w[i];
        }
    }
    let count = member.iter().filter(|&&m| m).count();
    let p1 = n1 / (n0 + n1);
    let leaf = TreeNode::Leaf {
        label: SecurityLabel::from_secure(p1 >= 0.5),
        p1,
        count,
    };
    if depth_left == 0 || n0 == 0.0 || n1 == 0.0 {
        return leaf;
    }
    let Some(split) = best_split(x, y, w, sorted, Some(&member)) else {
        return leaf;
    };
    if split.impurity >= weighted_gini(n0, n1) {
        return leaf;
    }
    let goes_left = |i: usize| x[i][split.feature] <= split.threshold;
    let left: Vec<bool> = (0..x.len()).map(|i| member[i] && goes_left(i)).collect();
    let right: Vec<bool> = (0..x.len()).map(|i| member[i] && !goes_left(i)).collect();
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(x, y, w, sorted, left, depth_left - 1)),
        right: Box::new(grow(x, y, w, sorted, right, depth_left - 1)),
    }
}
