use std::io;
use std::path::PathBuf;

use thiserror::Error;
use tomigo_core::error::{DecodeError, DialogueError, ProviderError, RealignError, SynthesisError};

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("{path}: stored graph is invalid: {source}")]
    Graph {
        path: PathBuf,
        #[source]
        source: DecodeError,
    },
    #[error("project already exists at {0}")]
    AlreadyExists(PathBuf),
    /// Raised by the crash-simulation hook after the temp file is written
    /// and before it is renamed into place.
    #[error("simulated crash before renaming {0}")]
    SimulatedCrash(PathBuf),
}

impl StorageError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> StorageError {
        let path = path.into();
        move |source| StorageError::Io { path, source }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("environment variable {0} is not set")]
    MissingVar(&'static str),
    #[error("invalid value for {var}: {reason}")]
    Invalid { var: &'static str, reason: String },
}

/// Everything a service operation can fail with. `code()` is the stable
/// identifier used in problem-details responses.
#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("project `{0}` not found")]
    NotFound(String),
    #[error("design `{0}` not found")]
    DesignNotFound(String),
    #[error("invalid brief: {0}")]
    InvalidBrief(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("another mutation is in flight for project `{0}`")]
    ConcurrentMutation(String),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
    #[error(transparent)]
    Realign(#[from] RealignError),
}

fn provider_code(e: &ProviderError) -> &'static str {
    match e {
        ProviderError::Transport(_) => "Transport",
        ProviderError::Auth(_) => "Auth",
        ProviderError::RateLimited { .. } => "RateLimited",
        ProviderError::Rejected(_) => "Rejected",
        ProviderError::MockExhausted { .. } => "MockExhausted",
        ProviderError::InvalidRequest(_) => "InvalidRequest",
    }
}

fn provider_status(e: &ProviderError) -> u16 {
    match e {
        ProviderError::RateLimited { .. } => 503,
        ProviderError::Rejected(_) => 422,
        ProviderError::InvalidRequest(_) => 500,
        _ => 502,
    }
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "NotFound",
            ServiceError::DesignNotFound(_) => "NotFound",
            ServiceError::InvalidBrief(_) => "InvalidBrief",
            ServiceError::BadRequest(_) => "BadRequest",
            ServiceError::ConcurrentMutation(_) => "ConcurrentMutation",
            ServiceError::Storage(_) => "StorageError",
            ServiceError::Synthesis(e) => match e {
                SynthesisError::Provider(p) => provider_code(p),
                SynthesisError::MalformedOutput(_) => "MalformedOutput",
                SynthesisError::EmptyGraph => "EmptyGraph",
                SynthesisError::SynthesisFailed { .. } => "SynthesisFailed",
                SynthesisError::InvalidInput(_) => "InvalidInput",
            },
            ServiceError::Dialogue(e) => match e {
                DialogueError::Provider(p) => provider_code(p),
                DialogueError::MalformedOutput(_) => "MalformedOutput",
                DialogueError::NoUserMessage => "NoUserMessage",
                DialogueError::NoTargets => "NoTargets",
            },
            ServiceError::Realign(e) => match e {
                RealignError::Provider(p) => provider_code(p),
                RealignError::ContentRejected(_) => "ContentRejected",
                RealignError::MalformedOutput(_) => "MalformedOutput",
                RealignError::EmptyConcept => "EmptyConcept",
                RealignError::MissingNode(_) => "MissingNode",
                RealignError::NoGaps => "NoGaps",
            },
        }
    }

    pub fn status(&self) -> u16 {
        match self {
            ServiceError::NotFound(_) | ServiceError::DesignNotFound(_) => 404,
            ServiceError::InvalidBrief(_) | ServiceError::BadRequest(_) => 400,
            ServiceError::ConcurrentMutation(_) => 409,
            ServiceError::Storage(_) => 500,
            ServiceError::Synthesis(SynthesisError::Provider(p))
            | ServiceError::Dialogue(DialogueError::Provider(p))
            | ServiceError::Realign(RealignError::Provider(p)) => provider_status(p),
            ServiceError::Synthesis(SynthesisError::InvalidInput(_)) => 400,
            ServiceError::Realign(RealignError::ContentRejected(_)) => 422,
            ServiceError::Realign(RealignError::MissingNode(_)) => 404,
            ServiceError::Realign(RealignError::EmptyConcept | RealignError::NoGaps)
            | ServiceError::Dialogue(DialogueError::NoTargets | DialogueError::NoUserMessage) => 409,
            ServiceError::Synthesis(_) | ServiceError::Dialogue(_) | ServiceError::Realign(_) => 502,
        }
    }
}
