//! Loads mock-provider fixture directories.
//!
//! Layout: `<dir>/<stage>/<index>.resp.json` holds a raw text response (any
//! prose or fences around the JSON are kept, so tolerant parsing is
//! exercised), `<index>.resp.png` (or another image extension) holds image
//! bytes, and `<index>.err.json` scripts a provider error such as
//! `{"error": "rate_limited", "retry_after_secs": 2}`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use tomigo_core::error::{FixtureLoadError, ProviderError};
use tomigo_core::provider::{media_type_for_extension, stage, FixtureSet, ImageData, MockResponse};

#[derive(Debug, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
enum ScriptedError {
    Transport { detail: Option<String> },
    Auth { detail: Option<String> },
    RateLimited { retry_after_secs: Option<u64> },
    Rejected { detail: Option<String> },
}

impl From<ScriptedError> for ProviderError {
    fn from(e: ScriptedError) -> Self {
        let d = |d: Option<String>| d.unwrap_or_else(|| "scripted".to_string());
        match e {
            ScriptedError::Transport { detail } => ProviderError::Transport(d(detail)),
            ScriptedError::Auth { detail } => ProviderError::Auth(d(detail)),
            ScriptedError::RateLimited { retry_after_secs } => ProviderError::RateLimited { retry_after_secs },
            ScriptedError::Rejected { detail } => ProviderError::Rejected(d(detail)),
        }
    }
}

fn invalid(path: &Path, reason: impl Into<String>) -> FixtureLoadError {
    FixtureLoadError::Invalid { path: path.display().to_string(), reason: reason.into() }
}

/// Reads a fixture directory into a [`FixtureSet`]. Unknown stage
/// directories, unparseable file names and index gaps are load errors.
pub fn load_fixtures(dir: &Path) -> Result<FixtureSet, FixtureLoadError> {
    let entries = fs::read_dir(dir).map_err(|e| invalid(dir, e.to_string()))?;
    let mut indexed: BTreeMap<String, BTreeMap<usize, MockResponse>> = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| invalid(dir, e.to_string()))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let stage_name = entry.file_name().to_string_lossy().into_owned();
        if !stage::ALL.contains(&stage_name.as_str()) {
            return Err(invalid(&path, format!("unknown stage `{stage_name}`")));
        }
        let by_index = indexed.entry(stage_name).or_default();
        for file in fs::read_dir(&path).map_err(|e| invalid(&path, e.to_string()))? {
            let file = file.map_err(|e| invalid(&path, e.to_string()))?.path();
            let (index, response) = load_response(&file)?;
            if by_index.insert(index, response).is_some() {
                return Err(invalid(&file, format!("duplicate response for index {index}")));
            }
        }
    }
    FixtureSet::from_indexed(indexed)
}

fn load_response(file: &Path) -> Result<(usize, MockResponse), FixtureLoadError> {
    let name = file
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| invalid(file, "non UTF-8 file name"))?;
    let (index, rest) = name.split_once('.').ok_or_else(|| invalid(file, "expected <index>.resp.<ext>"))?;
    let index: usize = index.parse().map_err(|_| invalid(file, "file name must start with a call index"))?;
    let bytes = fs::read(file).map_err(|e| invalid(file, e.to_string()))?;
    let response = match rest {
        "resp.json" | "resp.txt" => {
            MockResponse::Text(String::from_utf8(bytes).map_err(|_| invalid(file, "response is not UTF-8"))?)
        }
        "err.json" => {
            let scripted: ScriptedError =
                serde_json::from_slice(&bytes).map_err(|e| invalid(file, e.to_string()))?;
            MockResponse::Error(scripted.into())
        }
        other => {
            let ext = other.strip_prefix("resp.").ok_or_else(|| invalid(file, "expected .resp.* or .err.json"))?;
            let media_type =
                media_type_for_extension(ext).ok_or_else(|| invalid(file, format!("unsupported extension `{ext}`")))?;
            MockResponse::Image(ImageData::new(media_type, bytes))
        }
    };
    Ok((index, response))
}
