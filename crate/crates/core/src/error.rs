//! Error type shared by every module in the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("eigensolver did not converge within {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    #[error("metric is not positive semidefinite: lambda_min = {lambda_min:e}, lambda_max = {lambda_max:e}")]
    IndefiniteMetric { lambda_min: f64, lambda_max: f64 },

    #[error("no null direction available at step {step} (null space is empty)")]
    NoNullDirection { step: usize },

    #[error("no positive direction available at step {step} (metric fully degenerate)")]
    NoPositiveDirection { step: usize },

    #[error("start point lies outside the configured bounds")]
    StartOutsideBounds,

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("dimension {dim} is constant; min-max normalization is undefined")]
    ConstantDimension { dim: usize },

    #[error("empty point set passed to {0}")]
    EmptyPointSet(&'static str),

    #[error("transversal leg budget exceeded after {leaves} leaves")]
    LeafBudgetExceeded { leaves: usize },

    #[error("unknown name `{name}` for {what}; known: {known}")]
    UnknownName {
        what: &'static str,
        name: String,
        known: String,
    },

    #[error("leaf {index}: {source}")]
    Leaf {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach a leaf index to an error propagated out of a foliation pass.
    pub fn at_leaf(self, index: usize) -> Error {
        Error::Leaf {
            index,
            source: Box::new(self),
        }
    }
}
