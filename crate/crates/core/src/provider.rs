//! Uniform request interface over text, vision and image backends.
//!
//! Engine modules talk to a [`Provider`] only through [`complete_structured`]
//! and [`complete_image`], which own output validation and the self-repair
//! retry. Implementations just move bytes and record every attempt in their
//! [`Transcript`].

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use spin::Mutex;

use crate::canonical::to_canonical_string;
use crate::error::{CallError, FixtureLoadError, PayloadError, ProviderError};
use crate::shape::{parse_structured_payload, Shape};

/// Stage tags carried on every request; the mock provider matches on them.
pub mod stage {
    pub const IMAGE_ANALYSIS: &str = "image_analysis";
    pub const SYNTHESIS: &str = "synthesis";
    pub const REPAIR: &str = "repair";
    pub const INTERPRET: &str = "interpret";
    pub const CONSISTENCY: &str = "consistency";
    pub const QUESTION: &str = "question";
    pub const GENERATE: &str = "generate";
    pub const GAP: &str = "gap";
    pub const UPDATE: &str = "update";
    pub const APPLY: &str = "apply";
    /// Brief-to-image generation that bypasses the graph, for comparison demos.
    pub const DIRECT: &str = "direct";

    pub const ALL: [&str; 11] = [
        IMAGE_ANALYSIS, SYNTHESIS, REPAIR, INTERPRET, CONSISTENCY, QUESTION, GENERATE, GAP,
        UPDATE, APPLY, DIRECT,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RequestKind {
    TextStructured,
    VisionStructured,
    ImageGeneration,
    ImageEdit,
}

impl RequestKind {
    pub fn is_structured(self) -> bool {
        matches!(self, RequestKind::TextStructured | RequestKind::VisionStructured)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageData {
    pub media_type: String,
    pub bytes: Vec<u8>,
}

impl ImageData {
    pub fn new(media_type: impl Into<String>, bytes: Vec<u8>) -> Self {
        ImageData { media_type: media_type.into(), bytes }
    }

    pub fn sha256_hex(&self) -> String {
        sha256_hex(&self.bytes)
    }

    fn digest_value(&self) -> Value {
        json!({ "media_type": self.media_type, "sha256": self.sha256_hex(), "len": self.bytes.len() })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// File extension for a media type, used for content-addressed names.
pub fn extension_for(media_type: &str) -> &'static str {
    match media_type {
        "image/png" => "png",
        "image/jpeg" | "image/jpg" => "jpg",
        "image/webp" => "webp",
        "image/gif" => "gif",
        _ => "bin",
    }
}

pub fn media_type_for_extension(ext: &str) -> Option<&'static str> {
    match ext.to_ascii_lowercase().as_str() {
        "png" => Some("image/png"),
        "jpg" | "jpeg" => Some("image/jpeg"),
        "webp" => Some("image/webp"),
        "gif" => Some("image/gif"),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PromptPart {
    Text(String),
    Image(ImageData),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderRequest {
    pub kind: RequestKind,
    pub stage: String,
    pub parts: Vec<PromptPart>,
    pub expected_shape: Option<Shape>,
}

impl ProviderRequest {
    pub fn structured(
        kind: RequestKind,
        stage: &str,
        parts: Vec<PromptPart>,
        shape: Shape,
    ) -> Result<Self, ProviderError> {
        let req = ProviderRequest { kind, stage: stage.to_string(), parts, expected_shape: Some(shape) };
        req.check()?;
        Ok(req)
    }

    pub fn image(kind: RequestKind, stage: &str, parts: Vec<PromptPart>) -> Result<Self, ProviderError> {
        let req = ProviderRequest { kind, stage: stage.to_string(), parts, expected_shape: None };
        req.check()?;
        Ok(req)
    }

    pub fn check(&self) -> Result<(), ProviderError> {
        let has_text = self.parts.iter().any(|p| matches!(p, PromptPart::Text(_)));
        if self.kind.is_structured() {
            let ok = match &self.expected_shape {
                Some(Shape::Object { fields, .. }) => !fields.is_empty(),
                Some(_) => true,
                None => false,
            };
            if !ok {
                return Err(ProviderError::InvalidRequest(
                    "structured request needs a non-empty expected shape".into(),
                ));
            }
        } else if !has_text {
            return Err(ProviderError::InvalidRequest("image request needs a text part".into()));
        }
        if self.kind == RequestKind::ImageEdit
            && !self.parts.iter().any(|p| matches!(p, PromptPart::Image(_)))
        {
            return Err(ProviderError::InvalidRequest("image edit needs a source image".into()));
        }
        Ok(())
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for p in &self.parts {
            if let PromptPart::Text(t) = p {
                if !out.is_empty() {
                    out.push_str("\n\n");
                }
                out.push_str(t);
            }
        }
        out
    }

    pub fn images(&self) -> impl Iterator<Item = &ImageData> {
        self.parts.iter().filter_map(|p| match p {
            PromptPart::Image(i) => Some(i),
            PromptPart::Text(_) => None,
        })
    }

    fn with_appended_text(&self, text: String) -> Self {
        let mut next = self.clone();
        next.parts.push(PromptPart::Text(text));
        next
    }

    /// Transcript form: text verbatim, images by digest.
    pub fn summary_value(&self) -> Value {
        let parts: Vec<Value> = self
            .parts
            .iter()
            .map(|p| match p {
                PromptPart::Text(t) => json!({ "text": t }),
                PromptPart::Image(i) => json!({ "image": i.digest_value() }),
            })
            .collect();
        json!({
            "kind": self.kind,
            "stage": self.stage,
            "parts": parts,
            "expected_shape": self.expected_shape,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawResponse {
    Text(String),
    Image(ImageData),
}

impl RawResponse {
    pub fn summary_value(&self) -> Value {
        match self {
            RawResponse::Text(t) => json!({ "text": t }),
            RawResponse::Image(i) => json!({ "image": i.digest_value() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Structured(Value),
    Image(ImageData),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Usage {
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderResponse {
    pub payload: Payload,
    pub raw: RawResponse,
    pub usage: Usage,
    pub warnings: Vec<String>,
}

impl ProviderResponse {
    pub fn value(&self) -> Option<&Value> {
        match &self.payload {
            Payload::Structured(v) => Some(v),
            Payload::Image(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub seq: u64,
    pub request: Value,
    pub outcome: Result<Value, String>,
    pub started_at: u64,
    pub finished_at: u64,
}

impl TranscriptEntry {
    pub fn stage(&self) -> &str {
        self.request.get("stage").and_then(Value::as_str).unwrap_or_default()
    }

    pub fn to_value(&self) -> Value {
        let outcome = match &self.outcome {
            Ok(v) => json!({ "ok": v }),
            Err(e) => json!({ "error": e }),
        };
        json!({
            "seq": self.seq,
            "request": self.request,
            "outcome": outcome,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        })
    }
}

/// Append-only log of provider attempts. Appends are serialized internally.
#[derive(Debug, Default)]
pub struct Transcript {
    entries: Mutex<Vec<TranscriptEntry>>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(
        &self,
        request: &ProviderRequest,
        outcome: &Result<RawResponse, ProviderError>,
        started_at: u64,
        finished_at: u64,
    ) {
        let mut entries = self.entries.lock();
        let seq = entries.len() as u64;
        entries.push(TranscriptEntry {
            seq,
            request: request.summary_value(),
            outcome: match outcome {
                Ok(r) => Ok(r.summary_value()),
                Err(e) => Err(e.to_string()),
            },
            started_at,
            finished_at,
        });
    }

    pub fn len(&self) -> usize {
        self.entries.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> Vec<TranscriptEntry> {
        self.entries.lock().clone()
    }

    pub fn stages(&self) -> Vec<String> {
        self.entries.lock().iter().map(|e| e.stage().to_string()).collect()
    }

    /// One canonical JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in self.entries.lock().iter() {
            out.push_str(&to_canonical_string(&e.to_value()));
            out.push('\n');
        }
        out
    }
}

pub trait Provider: Send + Sync {
    /// Performs one attempt and records it in the transcript.
    fn send(&self, request: &ProviderRequest) -> Result<RawResponse, ProviderError>;

    fn transcript(&self) -> &Transcript;
}

/// Sends a structured request and validates the reply against its shape,
/// retrying once with the validation error appended.
pub fn complete_structured(provider: &dyn Provider, request: &ProviderRequest) -> Result<ProviderResponse, CallError> {
    complete_structured_with_retries(provider, request, 1)
}

pub fn complete_structured_with_retries(
    provider: &dyn Provider,
    request: &ProviderRequest,
    retries: u32,
) -> Result<ProviderResponse, CallError> {
    if !request.kind.is_structured() {
        return Err(ProviderError::InvalidRequest("not a structured request".into()).into());
    }
    request.check()?;
    let shape = request.expected_shape.as_ref().expect("checked above");
    let mut current = request.clone();
    let mut attempts = 0;
    loop {
        attempts += 1;
        let raw = provider.send(&current)?;
        let failure = match &raw {
            RawResponse::Text(text) => match parse_structured_payload(text, shape) {
                Ok(parsed) => {
                    return Ok(ProviderResponse {
                        payload: Payload::Structured(parsed.value),
                        raw,
                        usage: Usage { attempts },
                        warnings: parsed.warnings,
                    })
                }
                Err(e) => (e, text.clone()),
            },
            RawResponse::Image(_) => (PayloadError::NoPayloadFound, String::from("<image>")),
        };
        if attempts > retries {
            return Err(CallError::MalformedOutput(failure.0.to_string()));
        }
        current = request.with_appended_text(repair_instruction(&failure.0, &failure.1));
    }
}

fn repair_instruction(err: &PayloadError, previous: &str) -> String {
    format!(
        "Your previous reply could not be used ({err}). Previous reply:\n{previous}\n\n\
         Reply again with a single JSON value that matches the expected shape exactly."
    )
}

pub fn complete_image(provider: &dyn Provider, request: &ProviderRequest) -> Result<ImageData, CallError> {
    if request.kind.is_structured() {
        return Err(ProviderError::InvalidRequest("not an image request".into()).into());
    }
    request.check()?;
    match provider.send(request)? {
        RawResponse::Image(img) => Ok(img),
        RawResponse::Text(_) => Err(CallError::MalformedOutput("expected image bytes, got text".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockResponse {
    Text(String),
    Image(ImageData),
    Error(ProviderError),
}

/// Scripted responses per stage, consumed in order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FixtureSet {
    stages: BTreeMap<String, Vec<MockResponse>>,
}

impl FixtureSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from explicitly indexed responses; indices for each
    /// stage must be contiguous from 0.
    pub fn from_indexed(indexed: BTreeMap<String, BTreeMap<usize, MockResponse>>) -> Result<Self, FixtureLoadError> {
        let mut stages = BTreeMap::new();
        for (stage, by_index) in indexed {
            let mut list = Vec::with_capacity(by_index.len());
            for (expected, (index, resp)) in by_index.into_iter().enumerate() {
                if index != expected {
                    return Err(FixtureLoadError::Gap { stage, index: expected });
                }
                list.push(resp);
            }
            stages.insert(stage, list);
        }
        Ok(FixtureSet { stages })
    }

    pub fn push(&mut self, stage: &str, response: MockResponse) -> &mut Self {
        self.stages.entry(stage.to_string()).or_default().push(response);
        self
    }

    pub fn push_text(&mut self, stage: &str, text: impl Into<String>) -> &mut Self {
        self.push(stage, MockResponse::Text(text.into()))
    }

    pub fn push_json(&mut self, stage: &str, value: &Value) -> &mut Self {
        self.push(stage, MockResponse::Text(value.to_string()))
    }

    pub fn push_image(&mut self, stage: &str, image: ImageData) -> &mut Self {
        self.push(stage, MockResponse::Image(image))
    }

    pub fn push_error(&mut self, stage: &str, error: ProviderError) -> &mut Self {
        self.push(stage, MockResponse::Error(error))
    }

    pub fn count(&self, stage: &str) -> usize {
        self.stages.get(stage).map_or(0, Vec::len)
    }

    pub fn stages(&self) -> impl Iterator<Item = &str> {
        self.stages.keys().map(String::as_str)
    }
}

/// Deterministic provider replaying a [`FixtureSet`]. Responses are matched
/// by `(stage, per-stage call index)`; timestamps are a logical clock.
#[derive(Debug)]
pub struct MockProvider {
    fixtures: FixtureSet,
    cursors: Mutex<BTreeMap<String, usize>>,
    // a Mutex rather than AtomicU64: 64-bit atomics are missing on some targets
    clock: Mutex<u64>,
    transcript: Transcript,
}

impl MockProvider {
    pub fn new(fixtures: FixtureSet) -> Self {
        MockProvider {
            fixtures,
            cursors: Mutex::new(BTreeMap::new()),
            clock: Mutex::new(0),
            transcript: Transcript::new(),
        }
    }

    /// Resumes a session whose earlier calls consumed `cursor` responses.
    pub fn with_cursor(self, cursor: BTreeMap<String, usize>) -> Self {
        *self.cursors.lock() = cursor;
        self
    }

    pub fn cursor(&self) -> BTreeMap<String, usize> {
        self.cursors.lock().clone()
    }
}

impl Provider for MockProvider {
    fn send(&self, request: &ProviderRequest) -> Result<RawResponse, ProviderError> {
        let started = {
            let mut clock = self.clock.lock();
            let t = *clock;
            *clock += 2;
            t
        };
        let outcome = {
            let mut cursors = self.cursors.lock();
            let index = cursors.get(&request.stage).copied().unwrap_or(0);
            let scripted = self.fixtures.stages.get(&request.stage).and_then(|l| l.get(index));
            match scripted {
                None => Err(ProviderError::MockExhausted { stage: request.stage.clone(), index }),
                Some(resp) => {
                    cursors.insert(request.stage.clone(), index + 1);
                    match resp {
                        MockResponse::Text(t) => Ok(RawResponse::Text(t.clone())),
                        MockResponse::Image(i) => Ok(RawResponse::Image(i.clone())),
                        MockResponse::Error(e) => Err(e.clone()),
                    }
                }
            }
        };
        self.transcript.record(request, &outcome, started, started + 1);
        outcome
    }

    fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}
