//! Flag/config-file merging. A `--config` JSON object supplies defaults;
//! any flag given on the command line overrides the matching key.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::failure::{CliResult, Failure};

pub fn load(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Failure::invalid(format!("config {} must be a JSON object", path.display()))),
        Err(e) => Err(Failure::invalid(format!("config {}: {e}", path.display()))),
    }
}

/// Overlay the non-null fields of `flags` onto `file` and deserialize.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, file: &Map<String, Value>) -> CliResult<T> {
    let mut merged = file.clone();
    let Value::Object(given) = serde_json::to_value(flags).expect("flag structs serialize") else {
        unreachable!("flag structs serialize to objects");
    };
    for (key, value) in given {
        if !value.is_null() {
            merged.insert(key, value);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| Failure::invalid(format!("config: {e}")))
}

/// Hex SHA-256 of the canonical (sorted-key, compact) JSON encoding.
pub fn hash(config: &Value) -> String {
    let bytes = serde_json::to_vec(config).expect("values serialize");
    hex::encode(Sha256::digest(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    struct Args {
        k: Option<usize>,
        eps: Option<f64>,
    }

    #[test]
    fn flags_override_file() {
        let file: Map<String, Value> = serde_json::from_str(r#"{"k": 3, "eps": 0.1}"#).unwrap();
        let merged = merge(&Args { k: None, eps: Some(0.2) }, &file).unwrap();
        assert_eq!(merged, Args { k: Some(3), eps: Some(0.2) });
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let file: Map<String, Value> = serde_json::from_str(r#"{"kk": 3}"#).unwrap();
        assert!(merge(&Args::default(), &file).is_err());
    }

    #[test]
    fn hash_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"a": 1, "b": [1.5, 2]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"b": [1.5, 2], "a": 1}"#).unwrap();
        assert_eq!(hash(&a), hash(&b));
        assert_eq!(hash(&a).len(), 64);
    }
}
