//! Synthetic labeled database: correlated load draws, economic dispatch,
//! DC power flow state and one security label per contingency.

mod csv_io;
mod database;
mod sampling;

use thiserror::Error;

use crate::grid::{GridError, LineId};

pub use csv_io::{format_f64, load_database, parse_database, save_database};
pub use database::{
    build_database, ClassCounts, GenerationConfig, LabeledDatabase, OperatingCondition, Split, SplitSizes,
};
pub use sampling::{condition_rng, sample_loads, standard_normal_cdf, Kumaraswamy, LoadSampler};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("correlation {0} does not give a positive definite matrix")]
    InvalidCorrelation(f64),
    #[error("generation stalled: {rejected} pre-fault infeasible draws for {accepted} accepted")]
    GenerationStalled { rejected: usize, accepted: usize },
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error("contingency {0} is not in the database")]
    UnknownContingency(LineId),
    #[error("malformed file at line {line}: {message}")]
    MalformedFile { line: u64, message: String },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Grid(#[from] GridError),
}
