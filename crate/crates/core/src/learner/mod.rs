//! Per-contingency boosted stump classifiers and a depth-limited tree baseline.

mod adaboost;
mod model_io;
mod stump;
mod tree;

pub use adaboost::{boost, train_adaboost, BoostConfig, BoostMode, CvReport, Ensemble};
pub use model_io::{load_model, save_model, ModelFile, StoredCalibration, MODEL_VERSION};
pub use stump::{train_stump, Leaf, SortedFeatures, SplitCandidate, Stump};
pub use tree::{train_single_tree, tree_predict, SingleTree, TreeNode};

use crate::grid::LineId;
use crate::scenario_gen::{LabeledDatabase, ScenarioError, Split};

/// Leaf probabilities are clamped to `[LEAF_EPS, 1 - LEAF_EPS]`.
pub const LEAF_EPS: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum LearnerError {
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("all feature vectors are identical but both classes are present")]
    DegenerateData,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("malformed model file: {0}")]
    MalformedFile(String),
    #[error("unsupported model version `{0}` (expected `{MODEL_VERSION}`)")]
    VersionMismatch(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] ScenarioError),
}

/// Boosted model for one contingency, trained on the training split.
pub fn train_for_contingency(
    db: &LabeledDatabase,
    contingency: LineId,
    config: &BoostConfig,
) -> Result<(Ensemble, CvReport), LearnerError> {
    let (x, y) = db.split_data(Split::Train, contingency)?;
    train_adaboost(&x, &y, config)
}

/// Depth-limited tree for one contingency, trained on the training split.
pub fn tree_for_contingency(
    db: &LabeledDatabase,
    contingency: LineId,
    max_depth: usize,
) -> Result<SingleTree, LearnerError> {
    let (x, y) = db.split_data(Split::Train, contingency)?;
    train_single_tree(&x, &y, max_depth)
}
