use alloc::string::String;

use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("type key `{0}` is already registered")]
    DuplicateTypeKey(String),
    #[error("unknown node role `{0}`")]
    InvalidRole(String),
    #[error("type key must not be empty")]
    EmptyKey,
    #[error("malformed schema document: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node `{0}` does not exist")]
    MissingNode(NodeId),
}

/// Structural invariant named by a failed graph load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Invariant {
    DuplicateId,
    DuplicateEdge,
    DanglingEdge,
    SelfLoop,
    EmptyId,
    EmptyDescription,
    EmptyReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("malformed graph document: {0}")]
    Parse(String),
    #[error("graph violates {invariant:?}: {detail}")]
    Integrity { invariant: Invariant, detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited (retry after {retry_after_secs:?}s)")]
    RateLimited { retry_after_secs: Option<u64> },
    #[error("request rejected by provider: {0}")]
    Rejected(String),
    #[error("no scripted response for stage `{stage}` call #{index}")]
    MockExhausted { stage: String, index: usize },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PayloadError {
    #[error("no JSON payload found in response")]
    NoPayloadFound,
    #[error("shape mismatch at {0}")]
    ShapeMismatch(String),
}

/// Failure of a structured or image provider call after the engine's own
/// retry policy has run.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CallError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("malformed provider output: {0}")]
    MalformedOutput(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Provider(ProviderError),
    #[error("malformed provider output: {0}")]
    MalformedOutput(String),
    #[error("provider returned a graph without usable nodes")]
    EmptyGraph,
    #[error("no parseable graph obtained in {rounds} round(s): {last_error}")]
    SynthesisFailed { rounds: usize, last_error: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl From<CallError> for SynthesisError {
    fn from(e: CallError) -> Self {
        match e {
            CallError::Provider(p) => SynthesisError::Provider(p),
            CallError::MalformedOutput(m) => SynthesisError::MalformedOutput(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DialogueError {
    #[error(transparent)]
    Provider(ProviderError),
    #[error("malformed provider output: {0}")]
    MalformedOutput(String),
    #[error("the latest history entry must be a user message")]
    NoUserMessage,
    #[error("a question needs at least one target type")]
    NoTargets,
}

impl From<CallError> for DialogueError {
    fn from(e: CallError) -> Self {
        match e {
            CallError::Provider(p) => DialogueError::Provider(p),
            CallError::MalformedOutput(m) => DialogueError::MalformedOutput(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RealignError {
    #[error(transparent)]
    Provider(ProviderError),
    #[error("provider refused the request: {0}")]
    ContentRejected(String),
    #[error("malformed provider output: {0}")]
    MalformedOutput(String),
    #[error("graph has no visual nodes to generate from")]
    EmptyConcept,
    #[error("node `{0}` does not exist")]
    MissingNode(NodeId),
    #[error("update requires at least one gap")]
    NoGaps,
}

impl From<CallError> for RealignError {
    fn from(e: CallError) -> Self {
        match e {
            CallError::Provider(ProviderError::Rejected(m)) => RealignError::ContentRejected(m),
            CallError::Provider(p) => RealignError::Provider(p),
            CallError::MalformedOutput(m) => RealignError::MalformedOutput(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FixtureLoadError {
    #[error("stage `{stage}` is missing response #{index}")]
    Gap { stage: String, index: usize },
    #[error("invalid fixture {path}: {reason}")]
    Invalid { path: String, reason: String },
}
