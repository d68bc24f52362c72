//! JSON configuration: defaults, then the file, then `key=value` overrides.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Version of the configuration schemas in `schema/`.
pub const SCHEMA_VERSION: &str = "1";

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Recursively merges `top` into `base`; objects merge key by key, anything
/// else is replaced.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies `a.b.c=value`. The value is parsed as JSON when possible and taken
/// as a string otherwise, so `nu=1.5`, `dealias=false` and `models=["ch"]`
/// all work, as does `closure=leading`.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            *node = Value::Object(Map::new());
        }
        let obj = node.as_object_mut().expect("object");
        if i == parts.len() - 1 {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("key has at least one part")
}

/// Defaults of `T`, overlaid with the file (if any) and then the overrides.
pub fn resolve<T>(file: Option<&Path>, overrides: &[String]) -> Result<T>
where
    T: Serialize + DeserializeOwned + Default,
{
    let mut value = serde_json::to_value(T::default())?;
    if let Some(path) = file {
        merge(&mut value, read_json(path)?);
    }
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
}
