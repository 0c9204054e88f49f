//! Experiment configuration files.
//!
//! A config is a TOML document with one section per concern:
//!
//! ```toml
//! seed = 0
//! out_dir = "runs/furuta"
//! theta_init = [6.0, 2.8, 3.16, -4.78, 1.94, -4.19]
//!
//! [target]            # target-domain values that differ from nominal
//! m_p = 0.0264
//!
//! [task]              # env = "furuta" | "ball_cup", plus settings and policy
//! [domain]            # specs, template and search_box arrays of tables
//! [bayrn]             # outer loop, with [bayrn.polopt] for the inner optimizer
//! ```
//!
//! Unknown keys are rejected. Errors carry the dotted key path.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bayrn_core::bayrn::{BayrnConfig, Experiment, TargetDomain};
use bayrn_core::domains::DomainSpace;
use bayrn_core::task::Task;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Furuta pendulum with the full mass/length search space.
pub const FURUTA: &str = include_str!("../configs/furuta.toml");
/// Ball-in-a-cup surrogate.
pub const BALLCUP: &str = include_str!("../configs/ballcup.toml");
/// Furuta sim-to-sim recovery over the two mass means.
pub const SIM2SIM: &str = include_str!("../configs/sim2sim.toml");

/// Looks up a shipped config by name (`furuta`, `ballcup`, `sim2sim`).
pub fn shipped(name: &str) -> Option<&'static str> {
    match name {
        "furuta" => Some(FURUTA),
        "ballcup" => Some(BALLCUP),
        "sim2sim" => Some(SIM2SIM),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub theta_init: Vec<f64>,
    /// Target-domain parameters that differ from their nominal value.
    #[serde(default)]
    pub target: BTreeMap<String, f64>,
    pub task: Task,
    pub domain: DomainSpace,
    pub bayrn: BayrnConfig,
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            let inner = err.into_inner();
            let mut key = if path == "." { String::new() } else { path };
            let message = inner.message().to_string();
            if let Some(field) = message.strip_prefix("missing field `").and_then(|m| m.strip_suffix('`')) {
                if !key.is_empty() {
                    key.push('.');
                }
                key.push_str(field);
            }
            let reason = match inner.span() {
                Some(span) => format!("{message} (line {})", line_of(text, span.start)),
                None => message,
            };
            LabError::config(key, reason)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::config("", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        self.validate()?;
        toml::to_string(self).map_err(|e| LabError::config("", e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_toml()?;
        std::fs::write(path, text).map_err(|e| LabError::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(LabError::config("seed", "must not exceed 2^63 - 1"));
        }
        self.domain.validate().map_err(|e| LabError::config("domain", e))?;
        self.task.check_domain(&self.domain.nominal()).map_err(|e| LabError::config("domain.specs", e))?;
        if self.theta_init.len() != self.task.policy_dim() {
            return Err(LabError::config(
                "theta_init",
                format!("policy has {} parameters, got {}", self.task.policy_dim(), self.theta_init.len()),
            ));
        }
        if let Some(bad) = self.theta_init.iter().position(|v| !v.is_finite()) {
            return Err(LabError::config(format!("theta_init[{bad}]"), "must be finite"));
        }
        self.bayrn.validate().map_err(|e| LabError::config("bayrn", e))?;
        for (id, v) in &self.target {
            if self.domain.spec(id).is_none() {
                return Err(LabError::config(format!("target.{id}"), "unknown domain parameter"));
            }
            if !v.is_finite() {
                return Err(LabError::config(format!("target.{id}"), "must be finite"));
            }
        }
        self.task.check_domain(&self.target_params()).map_err(|e| LabError::config("target", e))?;
        Ok(())
    }

    pub fn experiment(&self) -> Experiment {
        Experiment { task: self.task.clone(), space: self.domain.clone(), theta_init: self.theta_init.clone() }
    }

    /// Nominal parameters with the `target` overrides applied.
    pub fn target_domain(&self) -> TargetDomain {
        TargetDomain { params: self.target_params() }
    }

    fn target_params(&self) -> bayrn_core::domains::DomainParams {
        let mut params = self.domain.nominal();
        for (id, v) in &self.target {
            params.set(id, *v);
        }
        params
    }

    /// Copy with the command-line overrides applied.
    pub fn with_overrides(&self, seed: Option<u64>, out_dir: Option<&Path>) -> Self {
        let mut cfg = self.clone();
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if let Some(o) = out_dir {
            cfg.out_dir = o.to_path_buf();
        }
        cfg
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text.as_bytes()[..offset.min(text.len())].iter().filter(|&&b| b == b'\n').count() + 1
}
