//! Deterministic JSON text: object keys sorted, no insignificant whitespace.
//!
//! Independent of serde_json's map ordering feature, so feature unification
//! elsewhere in a build cannot change the bytes.

use alloc::string::String;
use alloc::vec::Vec;

use serde_json::Value;

pub fn to_canonical_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value);
    out
}

fn write_value(out: &mut String, value: &Value) {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(&String, &Value)> = map.iter().collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            out.push('{');
            for (i, (k, v)) in entries.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(out, k);
                out.push(':');
                write_value(out, v);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, v);
            }
            out.push(']');
        }
        Value::String(s) => write_string(out, s),
        other => out.push_str(&serde_json::to_string(other).unwrap_or_default()),
    }
}

fn write_string(out: &mut String, s: &str) {
    // serde_json escaping of a plain string cannot fail
    out.push_str(&serde_json::to_string(s).unwrap_or_default());
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sorts_nested_keys() {
        let v = json!({"b": 1, "a": {"z": [true, null], "y": "q\"x"}});
        assert_eq!(to_canonical_string(&v), r#"{"a":{"y":"q\"x","z":[true,null]},"b":1}"#);
    }
}
