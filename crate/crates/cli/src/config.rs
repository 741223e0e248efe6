//! JSON config files keyed by flag name; flags given on the command line win.

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

pub const SEED_ENV: &str = "DAA_SEED";

/// Overlays the non-null flag values of `flags` on the config file and
/// deserializes the result. Keys may use `-` or `_`.
pub fn resolve<A: Serialize + DeserializeOwned>(flags: &A, config: Option<&Path>) -> Result<A> {
    let mut merged = Map::new();
    if let Some(path) = config {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let Value::Object(obj) = value else {
            bail!("config {} must be a JSON object", path.display());
        };
        for (k, v) in obj {
            merged.insert(k.replace('-', "_"), v);
        }
    }
    let Value::Object(over) = serde_json::to_value(flags)? else {
        bail!("flags did not serialize to an object");
    };
    let known: Vec<String> = over.keys().cloned().collect();
    if let Some(k) = merged.keys().find(|k| !known.contains(k)) {
        bail!("unknown config key `{k}`");
    }
    for (k, v) in over {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).context("invalid config value")
}

/// Flag, then config file (already merged), then `DAA_SEED`, then 0.
pub fn seed_or_env(seed: Option<u64>) -> Result<u64> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v} is not an unsigned integer")),
        Err(_) => Ok(0),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the resolved configuration in canonical (sorted-key) JSON.
pub fn config_hash<A: Serialize>(command: &str, resolved: &A) -> Result<(Value, String)> {
    let value = serde_json::to_value(resolved)?;
    let canonical = serde_json::to_string(&serde_json::json!({ "command": command, "config": value }))?;
    Ok((value, sha256_hex(canonical.as_bytes())))
}

/// Parses `a,b,c`.
pub fn list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| anyhow::anyhow!("bad list item `{p}`: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize, Deserialize, Default, Debug, PartialEq)]
    struct A {
        seed: Option<u64>,
        n_traj: Option<usize>,
        system: Option<String>,
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"seed": 3, "n-traj": 7, "system": "vdp"}"#).unwrap();
        let flags = A { seed: Some(9), ..Default::default() };
        let r = resolve(&flags, Some(&p)).unwrap();
        assert_eq!(r, A { seed: Some(9), n_traj: Some(7), system: Some("vdp".into()) });
    }

    #[test]
    fn unknown_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"sed": 3}"#).unwrap();
        assert!(resolve(&A::default(), Some(&p)).is_err());
    }

    #[test]
    fn lists_parse() {
        assert_eq!(list::<f64>("0, 0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(list::<u64>("1,x").is_err());
    }
}
