//! Live provider speaking an OpenAI-compatible HTTP API.
//!
//! Structured kinds go to `POST {base}/chat/completions` (images inline as
//! data URLs), generation to `POST {base}/images/generations`, and edits to
//! `POST {base}/images/edits` as multipart. Transport failures and 429s are
//! retried with exponential backoff; every attempt lands in the transcript.

use std::thread;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use reqwest::blocking::{multipart, Client, Response};
use reqwest::header::RETRY_AFTER;
use serde_json::{json, Value};
use tomigo_core::error::ProviderError;
use tomigo_core::provider::{
    extension_for, ImageData, PromptPart, Provider, ProviderRequest, RawResponse, RequestKind, Transcript,
};

use crate::error::ConfigError;

pub const ENV_API_KEY: &str = "TOMIGO_API_KEY";
pub const ENV_PROVIDER_URL: &str = "TOMIGO_PROVIDER_URL";
pub const ENV_MODEL_TEXT: &str = "TOMIGO_MODEL_TEXT";
pub const ENV_MODEL_IMAGE: &str = "TOMIGO_MODEL_IMAGE";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpConfig {
    pub base_url: String,
    pub api_key: String,
    pub text_model: String,
    pub image_model: String,
    pub max_attempts: u32,
    pub backoff_base: Duration,
    pub timeout: Duration,
}

impl HttpConfig {
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Builds a config from any variable source; every variable is required.
    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let get = |var: &'static str| match lookup(var) {
            Some(v) if !v.trim().is_empty() => Ok(v.trim().to_string()),
            _ => Err(ConfigError::MissingVar(var)),
        };
        let api_key = get(ENV_API_KEY)?;
        let base_url = get(ENV_PROVIDER_URL)?;
        if !base_url.starts_with("http://") && !base_url.starts_with("https://") {
            return Err(ConfigError::Invalid { var: ENV_PROVIDER_URL, reason: "expected an http(s) URL".into() });
        }
        Ok(HttpConfig {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            text_model: get(ENV_MODEL_TEXT)?,
            image_model: get(ENV_MODEL_IMAGE)?,
            max_attempts: 3,
            backoff_base: Duration::from_secs(1),
            timeout: Duration::from_secs(300),
        })
    }
}

pub struct HttpProvider {
    config: HttpConfig,
    client: Client,
    transcript: Transcript,
}

impl std::fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpProvider")
            .field("base_url", &self.config.base_url)
            .field("text_model", &self.config.text_model)
            .field("image_model", &self.config.image_model)
            .finish_non_exhaustive()
    }
}

fn now_millis() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

impl HttpProvider {
    pub fn new(config: HttpConfig) -> Result<Self, ConfigError> {
        let client = Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ConfigError::Invalid { var: ENV_PROVIDER_URL, reason: e.to_string() })?;
        Ok(HttpProvider { config, client, transcript: Transcript::new() })
    }

    pub fn from_env() -> Result<Self, ConfigError> {
        Self::new(HttpConfig::from_env()?)
    }

    fn attempt(&self, request: &ProviderRequest) -> Result<RawResponse, ProviderError> {
        match request.kind {
            RequestKind::TextStructured | RequestKind::VisionStructured => {
                let body = chat_body(&self.config.text_model, request);
                let value = self.post_json("chat/completions", &body)?;
                let content = value["choices"][0]["message"]["content"]
                    .as_str()
                    .ok_or_else(|| ProviderError::Transport("response has no message content".into()))?;
                Ok(RawResponse::Text(content.to_string()))
            }
            RequestKind::ImageGeneration => {
                let body = json!({
                    "model": self.config.image_model,
                    "prompt": request.text(),
                    "n": 1,
                    "response_format": "b64_json",
                });
                let value = self.post_json("images/generations", &body)?;
                decode_image(&value).map(RawResponse::Image)
            }
            RequestKind::ImageEdit => {
                let mut form = multipart::Form::new()
                    .text("model", self.config.image_model.clone())
                    .text("prompt", request.text())
                    .text("response_format", "b64_json");
                for (i, img) in request.images().enumerate() {
                    let part = multipart::Part::bytes(img.bytes.clone())
                        .file_name(format!("image{i}.{}", extension_for(&img.media_type)))
                        .mime_str(&img.media_type)
                        .map_err(|e| ProviderError::InvalidRequest(e.to_string()))?;
                    form = form.part("image", part);
                }
                let response = self
                    .client
                    .post(self.url("images/edits"))
                    .bearer_auth(&self.config.api_key)
                    .multipart(form)
                    .send()
                    .map_err(|e| ProviderError::Transport(e.to_string()))?;
                decode_image(&read_json(response)?).map(RawResponse::Image)
            }
        }
    }

    fn url(&self, route: &str) -> String {
        format!("{}/{route}", self.config.base_url)
    }

    fn post_json(&self, route: &str, body: &Value) -> Result<Value, ProviderError> {
        let response = self
            .client
            .post(self.url(route))
            .bearer_auth(&self.config.api_key)
            .json(body)
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        read_json(response)
    }

    fn delay_for(&self, attempt: u32, error: &ProviderError) -> Duration {
        match error {
            ProviderError::RateLimited { retry_after_secs: Some(s) } => Duration::from_secs(*s),
            _ => self.config.backoff_base * 2u32.saturating_pow(attempt - 1),
        }
    }
}

fn chat_body(model: &str, request: &ProviderRequest) -> Value {
    let content: Vec<Value> = request
        .parts
        .iter()
        .map(|p| match p {
            PromptPart::Text(t) => json!({ "type": "text", "text": t }),
            PromptPart::Image(img) => json!({
                "type": "image_url",
                "image_url": { "url": format!("data:{};base64,{}", img.media_type, BASE64.encode(&img.bytes)) },
            }),
        })
        .collect();
    json!({
        "model": model,
        "messages": [{ "role": "user", "content": content }],
        "response_format": { "type": "json_object" },
    })
}

fn read_json(response: Response) -> Result<Value, ProviderError> {
    let status = response.status().as_u16();
    let retry_after = response
        .headers()
        .get(RETRY_AFTER)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u64>().ok());
    let body = response.text().map_err(|e| ProviderError::Transport(e.to_string()))?;
    match status {
        200..=299 => serde_json::from_str(&body).map_err(|e| ProviderError::Transport(format!("invalid JSON body: {e}"))),
        401 | 403 => Err(ProviderError::Auth(body)),
        429 => Err(ProviderError::RateLimited { retry_after_secs: retry_after }),
        400 if is_policy_refusal(&body) => Err(ProviderError::Rejected(body)),
        400..=499 => Err(ProviderError::InvalidRequest(format!("{status}: {body}"))),
        _ => Err(ProviderError::Transport(format!("{status}: {body}"))),
    }
}

fn is_policy_refusal(body: &str) -> bool {
    let lower = body.to_ascii_lowercase();
    ["content_policy", "safety", "moderation"].iter().any(|k| lower.contains(k))
}

fn decode_image(value: &Value) -> Result<ImageData, ProviderError> {
    let b64 = value["data"][0]["b64_json"]
        .as_str()
        .ok_or_else(|| ProviderError::Transport("response has no image data".into()))?;
    let bytes = BASE64
        .decode(b64)
        .map_err(|e| ProviderError::Transport(format!("invalid base64 image: {e}")))?;
    Ok(ImageData::new(sniff_media_type(&bytes), bytes))
}

pub fn sniff_media_type(bytes: &[u8]) -> &'static str {
    if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        "image/png"
    } else if bytes.starts_with(&[0xFF, 0xD8, 0xFF]) {
        "image/jpeg"
    } else if bytes.len() >= 12 && &bytes[..4] == b"RIFF" && &bytes[8..12] == b"WEBP" {
        "image/webp"
    } else if bytes.starts_with(b"GIF8") {
        "image/gif"
    } else {
        "application/octet-stream"
    }
}

impl Provider for HttpProvider {
    fn send(&self, request: &ProviderRequest) -> Result<RawResponse, ProviderError> {
        request.check()?;
        let mut attempt = 1;
        loop {
            let started = now_millis();
            let outcome = self.attempt(request);
            self.transcript.record(request, &outcome, started, now_millis());
            match outcome {
                Err(e @ (ProviderError::Transport(_) | ProviderError::RateLimited { .. }))
                    if attempt < self.config.max_attempts =>
                {
                    thread::sleep(self.delay_for(attempt, &e));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}
