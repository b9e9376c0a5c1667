//! Experiment configuration: a TOML document with defaults for everything
//! except the experiment kind and the system.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rde::{f_sample_grid, verify_f_conditions, RdParams};
use crate::setops::{EngineOptions, PullbackSchedule};
use crate::testbeds::{BistableODE, ScalarLinearSDE};
use crate::wiener::grid_index;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Axioms,
    Attractor,
    Absorbing,
    Tails,
    Periodicity,
    #[serde(alias = "testbed-oracle")]
    Oracle,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Axioms => "axioms",
            ExperimentKind::Attractor => "attractor",
            ExperimentKind::Absorbing => "absorbing",
            ExperimentKind::Tails => "tails",
            ExperimentKind::Periodicity => "periodicity",
            ExperimentKind::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum SystemConfig {
    Linear(ScalarLinearSDE),
    Bistable(BistableODE),
    Rd(RdParams),
}

impl SystemConfig {
    pub fn name(&self) -> &'static str {
        match self {
            SystemConfig::Linear(_) => "linear",
            SystemConfig::Bistable(_) => "bistable",
            SystemConfig::Rd(_) => "rd",
        }
    }

    /// Step of the driving paths (and grid quantum for all durations).
    pub fn dt_path(&self) -> f64 {
        match self {
            SystemConfig::Linear(s) => s.dt,
            SystemConfig::Bistable(b) => b.dt,
            SystemConfig::Rd(p) => p.dt_path(),
        }
    }

    pub fn period(&self) -> Option<f64> {
        match self {
            SystemConfig::Linear(s) => s.forcing.period(),
            SystemConfig::Bistable(_) => None,
            SystemConfig::Rd(p) if !p.g_space.is_zero() => p.g_time.period(),
            SystemConfig::Rd(_) => None,
        }
    }
}

/// How initial sets and samples are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    /// Lattice spacing for scalar balls (the sampling density).
    pub spacing: f64,
    /// Radii of the fixed-ball families pulled back.
    pub family_radii: Vec<f64>,
    /// `(τ, ω, x)` samples per seed in axiom checks.
    pub samples_per_seed: usize,
    /// Durations `t`, `s` for the composition check; default `64·dt_path`.
    pub t: Option<f64>,
    pub s: Option<f64>,
    /// Window of each sampled path (extended on demand).
    pub path_t_min: f64,
    pub path_t_max: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            spacing: 0.05,
            family_radii: vec![1.0, 5.0, 10.0],
            samples_per_seed: 16,
            t: None,
            s: None,
            path_t_min: -60.0,
            path_t_max: 1.0,
        }
    }
}

/// Calibration of `β` in the absorbing radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Use this `β` instead of calibrating.
    pub beta: Option<f64>,
    /// Seeds used for calibration; kept apart from the validation seeds.
    pub seeds: Vec<u64>,
    /// Only pullback times `t ≥ settle` enter the calibration.
    pub settle: f64,
    pub safety: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            beta: None,
            seeds: (1000..1032).collect(),
            settle: 4.0,
            safety: crate::rde::BETA_SAFETY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailConfig {
    /// Pullback time of the tail experiment.
    pub t: f64,
    /// Tail radius as a fraction of `ℓ`.
    pub k_fraction: f64,
    /// Radius of the initial ball.
    pub radius: f64,
}

impl Default for TailConfig {
    fn default() -> Self {
        Self {
            t: 40.0,
            k_fraction: 0.5,
            radius: 1.0,
        }
    }
}

/// Tolerances; `None` selects the per-system default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub identity: Option<f64>,
    pub cocycle: Option<f64>,
    pub periodic: Option<f64>,
    pub attractor: Option<f64>,
    pub union: Option<f64>,
    pub decay_ratio: Option<f64>,
    pub tail_fraction: Option<f64>,
    pub truncation: Option<f64>,
    pub periodicity: Option<f64>,
    pub quasi_solution: Option<f64>,
    pub invariance: Option<f64>,
}

/// One experiment: what to run, on which system, with which seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub system: SystemConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_taus")]
    pub taus: Vec<f64>,
    pub schedule: PullbackSchedule,
    #[serde(default)]
    pub engine: EngineOptions,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    #[serde(default)]
    pub tails: TailConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Cap on concurrent ensemble members (default: rayon's pool).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Directory for the report and columnar outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_seeds() -> Vec<u64> {
    (0..8).collect()
}

fn default_taus() -> Vec<f64> {
    vec![0.0]
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        Ok(cfg)
    }

    /// Parses `text` after applying `key=value` overrides, where keys are
    /// dotted paths and values are TOML literals (bare words become strings).
    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        for (key, raw) in overrides {
            let value = parse_literal(raw);
            set_path(&mut doc, key, value).map_err(|e| Error::Config(vec![e]))?;
        }
        let cfg: Self = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(vec![e.to_string()]))?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    /// SHA-256 of the canonical JSON form, without the output directory and
    /// worker cap (which do not affect results).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        c.workers = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Every problem found, as `key: message` entries.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.seeds.is_empty() {
            bad.push("seeds: at least one seed is required".to_string());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            bad.push("seeds: must be distinct".to_string());
        }
        if self.taus.is_empty() {
            bad.push("taus: at least one initial time is required".to_string());
        }
        if let Err(e) = self.schedule.validate() {
            bad.push(format!("schedule: {e}"));
        }
        let dt = self.system.dt_path();
        for &t in &self.schedule.t_values {
            if grid_index(t, dt).is_err() {
                bad.push(format!(
                    "schedule.t_values: {t} is not a multiple of the path step {dt}"
                ));
            }
        }
        if let Some(w) = self.workers {
            if w == 0 {
                bad.push("workers: must be ≥ 1".to_string());
            }
        }
        if !(self.sampling.spacing > 0.0) {
            bad.push("sampling.spacing: must be positive".to_string());
        }
        if self.sampling.family_radii.iter().any(|r| !(*r > 0.0)) {
            bad.push("sampling.family_radii: radii must be positive".to_string());
        }
        if self.sampling.samples_per_seed == 0 {
            bad.push("sampling.samples_per_seed: must be ≥ 1".to_string());
        }
        if !(self.sampling.path_t_min <= 0.0 && self.sampling.path_t_max >= 0.0) {
            bad.push("sampling.path_t_min/path_t_max: window must contain 0".to_string());
        }
        for (name, v) in [("sampling.t", self.sampling.t), ("sampling.s", self.sampling.s)] {
            if let Some(v) = v {
                if grid_index(v, dt).is_err() || v < 0.0 {
                    bad.push(format!("{name}: {v} is not a non-negative multiple of {dt}"));
                }
            }
        }
        if let Some(b) = self.calibration.beta {
            if !(b > 0.0) {
                bad.push("calibration.beta: must be positive".to_string());
            }
        }
        if !(self.calibration.safety >= 1.0) {
            bad.push("calibration.safety: must be ≥ 1".to_string());
        }
        match &self.system {
            SystemConfig::Linear(s) => {
                if !(s.lambda > 0.0) || !(s.dt > 0.0) {
                    bad.push("system: lambda and dt must be positive".to_string());
                }
            }
            SystemConfig::Bistable(b) => {
                if !(b.dt > 0.0) {
                    bad.push("system.dt: must be positive".to_string());
                }
            }
            SystemConfig::Rd(p) => {
                if let Err(Error::Config(v)) = p.validate() {
                    bad.extend(v.into_iter().map(|m| format!("system.{m}")));
                }
                let (xs, ss) = f_sample_grid(p.ell, 16, 10.0, 400);
                if let Err(e) = verify_f_conditions(&p.f, &p.certificate, p.p, &xs, &ss) {
                    bad.push(format!("system.f: {e}"));
                }
                let t = self.tails.t;
                if self.kind == ExperimentKind::Tails && grid_index(t, dt).is_err() {
                    bad.push(format!("tails.t: {t} is not a multiple of {dt}"));
                }
                if !(self.tails.k_fraction > 0.0 && self.tails.k_fraction < 1.0) {
                    bad.push("tails.k_fraction: must lie in (0, 1)".to_string());
                }
            }
        }
        match (self.kind, &self.system) {
            (ExperimentKind::Tails, SystemConfig::Rd(_)) => {}
            (ExperimentKind::Tails, s) => bad.push(format!("kind: tails needs the rd system, got {}", s.name())),
            (ExperimentKind::Oracle, SystemConfig::Rd(_)) => {
                bad.push("kind: oracle runs on the testbeds only".to_string())
            }
            (ExperimentKind::Periodicity, s @ (SystemConfig::Linear(_) | SystemConfig::Rd(_)))
                if s.period().is_none() =>
            {
                bad.push("kind: periodicity needs periodic forcing".to_string())
            }
            _ => {}
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }
}

fn parse_literal(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(doc: &mut toml::Table, key: &str, value: toml::Value) -> std::result::Result<(), String> {
    let mut parts = key.split('.').peekable();
    let mut table = doc;
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(format!("{key}: empty key segment"));
        }
        if parts.peek().is_none() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| format!("{key}: {part} is not a table"))?;
    }
    Err(format!("{key}: empty key"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = r#"
kind = "axioms"
seeds = [0, 1]

[system]
type = "linear"
lambda = 1.0
noise_on = true
dt = 0.01
forcing = { kind = "constant", value = 1.0 }

[schedule]
t_values = [1.0, 2.0]
convergence_tol = 1e-6
stall_limit = 1
"#;

    #[test]
    fn parses_and_validates() {
        let c = ExperimentConfig::from_toml_str(LINEAR).unwrap();
        assert_eq!(c.kind, ExperimentKind::Axioms);
        assert_eq!(c.taus, vec![0.0]);
        c.validate().unwrap();
    }

    #[test]
    fn rd_system_with_defaults() {
        let text = LINEAR.replace(
            "type = \"linear\"\nlambda = 1.0\nnoise_on = true\ndt = 0.01\nforcing = { kind = \"constant\", value = 1.0 }",
            "type = \"rd\"\ninterior = 99",
        );
        let c = ExperimentConfig::from_toml_str(&text).unwrap();
        match &c.system {
            SystemConfig::Rd(p) => {
                assert_eq!(p.interior, 99);
                assert_eq!(p.lambda, 1.0);
            }
            other => panic!("{other:?}"),
        }
        c.validate().unwrap();
    }

    #[test]
    fn overrides_apply() {
        let c = ExperimentConfig::from_toml_with_overrides(
            LINEAR,
            &[
                ("system.lambda".into(), "2.5".into()),
                ("kind".into(), "attractor".into()),
                ("seeds".into(), "[4, 5, 6]".into()),
            ],
        )
        .unwrap();
        assert_eq!(c.kind, ExperimentKind::Attractor);
        assert_eq!(c.seeds, vec![4, 5, 6]);
        match c.system {
            SystemConfig::Linear(s) => assert_eq!(s.lambda, 2.5),
            _ => unreachable!(),
        }
    }

    #[test]
    fn validation_lists_offending_keys() {
        let c = ExperimentConfig::from_toml_with_overrides(
            LINEAR,
            &[
                ("seeds".into(), "[1, 1]".into()),
                ("schedule.t_values".into(), "[1.0, 1.005]".into()),
            ],
        )
        .unwrap();
        match c.validate() {
            Err(Error::Config(v)) => {
                assert!(v.iter().any(|m| m.starts_with("seeds")), "{v:?}");
                assert!(v.iter().any(|m| m.starts_with("schedule.t_values")), "{v:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml_str(&format!("{LINEAR}\nbogus = 1\n")).is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = ExperimentConfig::from_toml_str(LINEAR).unwrap();
        let mut b = a.clone();
        b.output = Some("/tmp/x".into());
        assert_eq!(a.hash(), b.hash());
        b.seeds.push(9);
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn round_trips() {
        let a = ExperimentConfig::from_toml_str(LINEAR).unwrap();
        let b = ExperimentConfig::from_toml_str(&a.to_toml_string().unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
