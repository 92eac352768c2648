//! JSON output with deterministic (sorted) key order.

use serde::Serialize;

use crate::error::Result;

/// Pretty JSON with object keys sorted lexicographically at every level.
pub fn to_sorted_string<T: Serialize>(value: &T) -> Result<String> {
    // serde_json::Value stores objects in a BTreeMap, which sorts keys.
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}
