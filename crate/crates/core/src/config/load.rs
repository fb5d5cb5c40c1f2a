use std::path::Path;

use serde_json::Value;

use super::ModelConfig;
use crate::error::{Error, Result, Violation};

/// Reads, parses and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ModelConfig> {
    load_config_with_overrides(path, &[])
}

pub fn load_config_with_overrides(
    path: impl AsRef<Path>,
    overrides: &[(String, String)],
) -> Result<ModelConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_config_with_overrides(&text, overrides)
}

pub fn parse_config(text: &str) -> Result<ModelConfig> {
    parse_config_with_overrides(text, &[])
}

/// Parses `text`, applies dotted-key overrides in order, then deserialises
/// strictly and validates.
pub fn parse_config_with_overrides(
    text: &str,
    overrides: &[(String, String)],
) -> Result<ModelConfig> {
    let mut doc: Value =
        serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    for (key, value) in overrides {
        apply_override(&mut doc, key, value)?;
    }
    let cfg: ModelConfig = serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        Error::ConfigInvalid(vec![Violation {
            key: if path == "." { String::new() } else { path },
            message: e.into_inner().to_string(),
        }])
    })?;
    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(Error::ConfigInvalid(violations));
    }
    Ok(cfg)
}

/// Sets `key` (dot separated, array indices allowed) to `raw`, which is read
/// as JSON when possible and as a bare string otherwise.
pub fn apply_override(doc: &mut Value, key: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(invalid(key, "empty path segment"));
    }
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| invalid(key, "expected an array index"))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| invalid(key, &format!("index {idx} out of range ({len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(invalid(key, "path descends into a scalar")),
        };
    }
    Ok(())
}

fn invalid(key: &str, message: &str) -> Error {
    Error::ConfigInvalid(vec![Violation {
        key: key.to_string(),
        message: message.to_string(),
    }])
}
