use slackcast_oracle::OracleError;
use slackcast_rtl::RtlError;
use slackcast_stage1::FingerprintError;
use thiserror::Error;

use crate::model::Model;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Frontend(#[from] RtlError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),

    #[error("duplicate module id `{0}`")]
    DuplicateId(String),
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("fingerprint of `{id}` has norm {norm}, expected 1")]
    NonUnitNorm { id: String, norm: f64 },
    #[error("retrieval bank has no eligible entries")]
    EmptyBank,
    #[error("bank and training split overlap: {0}")]
    DisjointnessViolation(String),

    #[error("non-finite activation at block {block}")]
    NonFiniteActivation { block: usize },
    #[error("bad steering config: {0}")]
    BadConfig(String),
    #[error("{phase} diverged at epoch {epoch}")]
    Divergence {
        phase: &'static str,
        epoch: usize,
        last_good: Box<Model>,
    },

    #[error("infeasible generator spec: {0}")]
    InfeasibleSpec(String),
    #[error("cannot form {k} clusters from {n} points")]
    DegenerateK { k: usize, n: usize },
    #[error("sampling pool is empty or smaller than the target")]
    EmptyPool,
    #[error("canonical-token collision across splits: {0}")]
    CollisionAfterDedup(String),
    #[error("pipeline stage out of order: {0}")]
    PipelineOrder(String),

    #[error("variance of {0} is zero; Pearson R undefined")]
    DegenerateVariance(&'static str),
    #[error("every sample was excluded by the epsilon rule")]
    AllExcluded,
    #[error("adaptation touched frozen state: {0}")]
    AdaptationViolation(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Frontend(e) => e.code(),
            Error::Oracle(e) => e.code(),
            Error::Fingerprint(e) => e.code(),
            Error::DuplicateId(_) => "DuplicateId",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonUnitNorm { .. } => "NonUnitNorm",
            Error::EmptyBank => "EmptyBank",
            Error::DisjointnessViolation(_) => "DisjointnessViolation",
            Error::NonFiniteActivation { .. } => "NonFiniteActivation",
            Error::BadConfig(_) => "BadConfig",
            Error::Divergence { .. } => "Divergence",
            Error::InfeasibleSpec(_) => "InfeasibleSpec",
            Error::DegenerateK { .. } => "DegenerateK",
            Error::EmptyPool => "EmptyPool",
            Error::CollisionAfterDedup(_) => "CollisionAfterDedup",
            Error::PipelineOrder(_) => "PipelineOrder",
            Error::DegenerateVariance(_) => "DegenerateVariance",
            Error::AllExcluded => "AllExcluded",
            Error::AdaptationViolation(_) => "AdaptationViolation",
            Error::Checkpoint(_) => "CheckpointError",
            Error::Io { .. } => "IoError",
            Error::Format { .. } => "FormatError",
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Error {
        Error::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        }
    }

    pub fn format(path: &std::path::Path, e: impl std::fmt::Display) -> Error {
        Error::Format {
            path: path.display().to_string(),
            msg: e.to_string(),
        }
    }
}

impl From<slackcast_stage1::Stage1Error> for Error {
    fn from(e: slackcast_stage1::Stage1Error) -> Self {
        match e {
            slackcast_stage1::Stage1Error::Frontend(e) => Error::Frontend(e),
            slackcast_stage1::Stage1Error::Fingerprint(e) => Error::Fingerprint(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
