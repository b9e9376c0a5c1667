//! The structured result document of one run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cocycle::ResidualRecord;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Results for one seed. `values` holds only finite numbers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
}

impl SeedRecord {
    pub fn ok() -> Self {
        Self {
            ok: true,
            ..Self::default()
        }
    }

    pub fn failed(error: impl Into<String>) -> Self {
        Self {
            ok: false,
            error: Some(error.into()),
            values: BTreeMap::new(),
        }
    }

    /// Records `value` under `key` when it is finite.
    pub fn insert(&mut self, key: impl Into<String>, value: f64) {
        if value.is_finite() {
            self.values.insert(key.into(), value);
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub kind: String,
    pub system: String,
    pub config_hash: String,
    pub code_version: String,
    pub seeds: Vec<u64>,
    pub per_seed: BTreeMap<u64, SeedRecord>,
    pub aggregate: BTreeMap<String, f64>,
    pub checks: Vec<ResidualRecord>,
    /// Free-form provenance (calibrated constants, notes).
    pub metadata: BTreeMap<String, String>,
    pub pass: bool,
    pub failures: Vec<String>,
    /// Excluded from [`ExperimentReport::body_json`].
    pub wall_time_s: f64,
}

impl ExperimentReport {
    pub fn new(kind: &str, system: &str, config_hash: String, seeds: Vec<u64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            system: system.to_string(),
            config_hash,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seeds,
            per_seed: BTreeMap::new(),
            aggregate: BTreeMap::new(),
            checks: Vec::new(),
            metadata: BTreeMap::new(),
            pass: false,
            failures: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn set_aggregate(&mut self, key: impl Into<String>, value: f64) {
        if value.is_finite() {
            self.aggregate.insert(key.into(), value);
        }
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn add_check(&mut self, record: ResidualRecord) {
        self.checks.push(record);
    }

    pub fn check(&self, name: &str) -> Option<&ResidualRecord> {
        self.checks.iter().find(|c| c.check == name)
    }

    /// Sets `pass` and `failures` from the checks and per-seed errors.
    pub fn finalize(&mut self) {
        let mut failures: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{}: {:e} > {:e}", c.check, c.max_residual, c.tolerance))
            .collect();
        failures.extend(
            self.per_seed
                .iter()
                .filter(|(_, r)| !r.ok)
                .map(|(s, r)| format!("seed {s}: {}", r.error.as_deref().unwrap_or("failed"))),
        );
        self.pass = failures.is_empty() && !self.checks.is_empty();
        self.failures = failures;
    }

    /// Whether any seed hit a runtime error (as opposed to a tolerance breach).
    pub fn has_runtime_errors(&self) -> bool {
        self.per_seed.values().any(|r| !r.ok)
    }

    /// 0 on pass, 1 on a tolerance breach, 2 on runtime errors.
    pub fn exit_code(&self) -> i32 {
        if self.has_runtime_errors() {
            2
        } else if self.pass {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without wall time: identical across reruns of one config.
    pub fn body_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("wall_time_s");
        }
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "report schema version {} (expected {SCHEMA_VERSION})",
                r.schema_version
            )));
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_and_exit_codes() {
        let mut r = ExperimentReport::new("axioms", "linear", "h".into(), vec![0]);
        r.per_seed.insert(0, SeedRecord::ok());
        r.add_check(ResidualRecord::new("identity", 10, 0.0, 1e-12));
        r.finalize();
        assert!(r.pass);
        assert_eq!(r.exit_code(), 0);
        r.add_check(ResidualRecord::new("cocycle", 10, 1.0, 1e-12));
        r.finalize();
        assert_eq!(r.exit_code(), 1);
        r.per_seed.insert(1, SeedRecord::failed("blow-up"));
        r.finalize();
        assert_eq!(r.exit_code(), 2);
        assert_eq!(r.failures.len(), 2);
    }

    #[test]
    fn body_excludes_wall_time_and_round_trips() {
        let mut a = ExperimentReport::new("axioms", "linear", "h".into(), vec![0]);
        let mut s = SeedRecord::ok();
        s.insert("x", 1.5);
        s.insert("nan", f64::NAN);
        a.per_seed.insert(0, s);
        let mut b = a.clone();
        a.wall_time_s = 1.0;
        b.wall_time_s = 2.0;
        assert_eq!(a.body_json(), b.body_json());
        assert!(!a.body_json().contains("nan"));
        assert_eq!(ExperimentReport::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn rejects_other_schema_versions() {
        let mut a = ExperimentReport::new("axioms", "linear", "h".into(), vec![]);
        a.schema_version = 99;
        assert!(ExperimentReport::from_json(&a.to_json()).is_err());
    }
}
