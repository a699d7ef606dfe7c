//! Expected-output shape descriptors and tolerant JSON payload extraction.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::PayloadError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    String,
    Integer,
    Number,
    Bool,
    Any,
    List { item: Box<Shape> },
    /// Object with arbitrary keys and uniformly shaped values.
    Map { value: Box<Shape> },
    Object { name: String, fields: Vec<Field> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    pub shape: Shape,
    pub required: bool,
}

impl Field {
    pub fn required(name: &str, shape: Shape) -> Self {
        Field { name: name.to_string(), shape, required: true }
    }

    pub fn optional(name: &str, shape: Shape) -> Self {
        Field { name: name.to_string(), shape, required: false }
    }
}

impl Shape {
    pub fn list(item: Shape) -> Shape {
        Shape::List { item: Box::new(item) }
    }

    pub fn map(value: Shape) -> Shape {
        Shape::Map { value: Box::new(value) }
    }

    pub fn object(name: &str, fields: Vec<Field>) -> Shape {
        Shape::Object { name: name.to_string(), fields }
    }

    fn label(&self) -> &'static str {
        match self {
            Shape::String => "string",
            Shape::Integer => "integer",
            Shape::Number => "number",
            Shape::Bool => "bool",
            Shape::Any => "any",
            Shape::List { .. } => "list",
            Shape::Map { .. } | Shape::Object { .. } => "object",
        }
    }

    /// Checks `value` against this shape. Unknown object fields are
    /// collected into `warnings` rather than rejected.
    pub fn check(&self, value: &Value, path: &str, warnings: &mut Vec<String>) -> Result<(), PayloadError> {
        let mismatch = || {
            let at = if path.is_empty() { "$" } else { path };
            PayloadError::ShapeMismatch(format!("{at}: expected {}", self.label()))
        };
        match self {
            Shape::Any => Ok(()),
            Shape::String => value.is_string().then_some(()).ok_or_else(mismatch),
            Shape::Bool => value.is_boolean().then_some(()).ok_or_else(mismatch),
            Shape::Number => value.is_number().then_some(()).ok_or_else(mismatch),
            Shape::Integer => (value.is_u64() || value.is_i64()).then_some(()).ok_or_else(mismatch),
            Shape::List { item } => {
                let items = value.as_array().ok_or_else(mismatch)?;
                for (i, v) in items.iter().enumerate() {
                    item.check(v, &format!("{path}[{i}]"), warnings)?;
                }
                Ok(())
            }
            Shape::Map { value: inner } => {
                let map = value.as_object().ok_or_else(mismatch)?;
                for (k, v) in map {
                    inner.check(v, &join(path, k), warnings)?;
                }
                Ok(())
            }
            Shape::Object { fields, .. } => {
                let map = value.as_object().ok_or_else(mismatch)?;
                for f in fields {
                    let p = join(path, &f.name);
                    match map.get(&f.name) {
                        Some(Value::Null) | None if f.required => {
                            return Err(PayloadError::ShapeMismatch(format!("{p}: missing required field")));
                        }
                        Some(Value::Null) | None => {}
                        Some(v) => f.shape.check(v, &p, warnings)?,
                    }
                }
                for k in map.keys() {
                    if !fields.iter().any(|f| &f.name == k) {
                        warnings.push(format!("ignored unknown field {}", join(path, k)));
                    }
                }
                Ok(())
            }
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPayload {
    pub value: Value,
    /// Exact source text the value was parsed from.
    pub span: String,
    pub warnings: Vec<String>,
}

/// Finds the first well-formed JSON object or array in `text`, skipping
/// markdown fences and surrounding prose, then validates it against `shape`.
pub fn parse_structured_payload(text: &str, shape: &Shape) -> Result<ParsedPayload, PayloadError> {
    let (value, span) = locate_json(text).ok_or(PayloadError::NoPayloadFound)?;
    let mut warnings = Vec::new();
    shape.check(&value, "", &mut warnings)?;
    Ok(ParsedPayload { value, span: span.to_string(), warnings })
}

fn locate_json(text: &str) -> Option<(Value, &str)> {
    for (start, ch) in text.char_indices() {
        if ch != '{' && ch != '[' {
            continue;
        }
        let rest = &text[start..];
        let mut stream = serde_json::Deserializer::from_str(rest).into_iter::<Value>();
        if let Some(Ok(value)) = stream.next() {
            let end = stream.byte_offset();
            return Some((value, &rest[..end]));
        }
    }
    None
}
