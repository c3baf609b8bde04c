//! Error type shared by every stage of the pipeline.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of a function (bad shape parameters, singular pose).
    #[error("domain error: {0}")]
    Domain(String),

    /// Two obstacles overlap, so no separating bisector exists.
    #[error("obstacles {i} and {j} overlap (gap {gap:.3e})")]
    Overlap { i: usize, j: usize, gap: f64 },

    #[error("construction error: {0}")]
    Construction(String),

    /// The planner Hessian became too ill-conditioned to invert.
    #[error("lost equilibrium at s = {s:.6}: {reason}")]
    LostEquilibrium { s: f64, reason: String },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Scenario validation failure pointing at the offending field.
    #[error("invalid scenario field `{path}`: {msg}")]
    Validation { path: String, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A pipeline stage failed; wraps the underlying error with the stage name.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error after peeling off stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub(crate) fn finite_or(x: f64, context: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite {
            context: context.to_string(),
        })
    }
}
