//! Small helpers for schema validation with JSON-path error messages.

use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub(crate) fn reject_unknown(obj: &Map<String, Value>, base: &str, allowed: &[&str]) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::parse(format!("{base}.{k}"), "unknown field")),
        None => Ok(()),
    }
}

pub(crate) fn field_u64(obj: &Map<String, Value>, name: &str, path: &str) -> Result<u64> {
    let v = obj
        .get(name)
        .ok_or_else(|| Error::parse(path, "missing field"))?;
    as_u64(v, path)
}

pub(crate) fn as_u64(v: &Value, path: &str) -> Result<u64> {
    if let Some(u) = v.as_u64() {
        return Ok(u);
    }
    if let Some(i) = v.as_i64() {
        if i <= 0 {
            return Err(Error::parse(path, format!("extent must be ≥ 1 (got {i})")));
        }
    }
    if let Some(f) = v.as_f64() {
        if f.fract() == 0.0 && f >= 0.0 && f < 1.8e19 {
            return Ok(f as u64);
        }
        return Err(Error::parse(path, format!("expected a positive integer, got {f}")));
    }
    Err(Error::parse(path, "expected a positive integer"))
}

pub(crate) fn field_f64(obj: &Map<String, Value>, name: &str, path: &str) -> Result<Option<f64>> {
    match obj.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| Error::parse(path, "expected a number")),
    }
}
