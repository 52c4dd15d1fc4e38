//! Run configuration: a JSON file plus flag overrides, resolved into typed
//! per-command parameters with strict key checking.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Issue};

pub const DEFAULT_OUTPUT_DIR: &str = "artifacts";
pub const DEFAULT_SEED: u64 = 1;

/// Contents of a configuration file. Everything is optional so flags can
/// supply the rest.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    #[serde(default)]
    pub params: Map<String, Value>,
    pub master_seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::config("config", format!("{} is not valid JSON: {e}", path.display())))?;
        let Value::Object(top) = &value else {
            return Err(CliError::config("config", "top level must be an object"));
        };
        let allowed = ["command", "params", "master_seed", "workers", "output_dir"];
        let unknown: Vec<Issue> = top
            .keys()
            .filter(|k| !allowed.contains(&k.as_str()))
            .map(|k| Issue::new(k, "unknown key"))
            .collect();
        if !unknown.is_empty() {
            return Err(CliError::Config(unknown));
        }
        serde_json::from_value(value).map_err(|e| CliError::config("config", e.to_string()))
    }
}

/// Fully resolved run settings shared by every command.
#[derive(Clone, Debug)]
pub struct RunSettings {
    pub master_seed: u64,
    pub workers: Option<usize>,
    pub output_dir: PathBuf,
}

/// Typed parameters of one command. Every field has a default so the set
/// of accepted keys is the key set of `Self::default()`.
pub trait Params: Serialize + DeserializeOwned + Default {
    /// Key that `--reps` sets.
    const REPS_KEY: &'static str;

    /// Range and dependency checks; push one issue per offending key.
    fn check(&self, issues: &mut Vec<Issue>);
}

pub fn allowed_keys<P: Params>() -> Vec<String> {
    match serde_json::to_value(P::default()) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

/// Strict resolution: unknown keys, type errors and range errors are all
/// collected before failing.
pub fn resolve<P: Params>(params: &Map<String, Value>) -> Result<P, CliError> {
    let allowed = allowed_keys::<P>();
    let mut issues: Vec<Issue> = params
        .keys()
        .filter(|k| !allowed.contains(k))
        .map(|k| Issue::new(format!("params.{k}"), "unknown key"))
        .collect();
    let mut merged = match serde_json::to_value(P::default()) {
        Ok(Value::Object(m)) => m,
        _ => Map::new(),
    };
    for (k, v) in params {
        if allowed.contains(k) {
            // Check each key on its own so every bad value is reported.
            let mut probe = merged.clone();
            probe.insert(k.clone(), v.clone());
            if let Err(e) = serde_json::from_value::<P>(Value::Object(probe)) {
                issues.push(Issue::new(format!("params.{k}"), e.to_string()));
            } else {
                merged.insert(k.clone(), v.clone());
            }
        }
    }
    // Merged keys all deserialized individually, so range checks can run
    // alongside the key errors.
    let resolved: P =
        serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::config("params", e.to_string()))?;
    resolved.check(&mut issues);
    if issues.is_empty() {
        Ok(resolved)
    } else {
        Err(CliError::Config(issues))
    }
}

/// Flag overrides collected as a JSON object; `None` leaves the key alone.
#[derive(Default)]
pub struct Overrides(pub Map<String, Value>);

impl Overrides {
    pub fn set<T: Serialize>(&mut self, key: &str, value: Option<T>) -> &mut Self {
        if let Some(v) = value {
            self.0.insert(key.into(), serde_json::to_value(v).expect("flag values serialize"));
        }
        self
    }

    /// A flag holding a JSON document (e.g. a policy object).
    pub fn set_json(&mut self, key: &str, text: Option<&str>) -> Result<&mut Self, CliError> {
        if let Some(t) = text {
            let v: Value = serde_json::from_str(t).map_err(|e| CliError::config(key, format!("not valid JSON: {e}")))?;
            self.0.insert(key.into(), v);
        }
        Ok(self)
    }

    pub fn apply(self, params: &mut Map<String, Value>) {
        params.extend(self.0);
    }
}

// Shared range checks.

pub fn check_unit_open(issues: &mut Vec<Issue>, field: &str, v: f64) {
    if !(v > 0.0 && v < 1.0) {
        issues.push(Issue::new(format!("params.{field}"), format!("{v} not in (0, 1)")));
    }
}

pub fn check_min(issues: &mut Vec<Issue>, field: &str, v: usize, min: usize) {
    if v < min {
        issues.push(Issue::new(format!("params.{field}"), format!("{v} < {min}")));
    }
}

pub fn check_non_negative(issues: &mut Vec<Issue>, field: &str, v: f64) {
    if !(v.is_finite() && v >= 0.0) {
        issues.push(Issue::new(format!("params.{field}"), format!("{v} must be finite and non-negative")));
    }
}

pub fn check_finite(issues: &mut Vec<Issue>, field: &str, v: f64) {
    if !v.is_finite() {
        issues.push(Issue::new(format!("params.{field}"), "must be finite"));
    }
}
