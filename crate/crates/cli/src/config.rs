//! Experiment parameters from flags and an optional JSON config file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use mupir_core::SystemConfig;
use serde::Deserialize;

/// Same vocabulary as the command-line flags; flags win over file values.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "K")]
    pub messages: Option<usize>,
    #[serde(rename = "N")]
    pub databases: Option<usize>,
    #[serde(rename = "U")]
    pub users: Option<usize>,
    /// One-based desired message index.
    pub theta: Option<usize>,
    pub seed: Option<u64>,
    pub routing: Option<String>,
    pub routing_file: Option<PathBuf>,
    pub messages_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub plan_out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fills every field `self` leaves unset from `fallback`.
    pub fn or(self, fallback: ExperimentConfig) -> Self {
        ExperimentConfig {
            messages: self.messages.or(fallback.messages),
            databases: self.databases.or(fallback.databases),
            users: self.users.or(fallback.users),
            theta: self.theta.or(fallback.theta),
            seed: self.seed.or(fallback.seed),
            routing: self.routing.or(fallback.routing),
            routing_file: self.routing_file.or(fallback.routing_file),
            messages_file: self.messages_file.or(fallback.messages_file),
            out: self.out.or(fallback.out),
            plan_out: self.plan_out.or(fallback.plan_out),
        }
    }

    pub fn system(&self) -> Result<SystemConfig> {
        let k = self.messages.ok_or_else(|| anyhow!("--K is required"))?;
        let n = self.databases.ok_or_else(|| anyhow!("--N is required"))?;
        let u = self.users.ok_or_else(|| anyhow!("--U is required"))?;
        Ok(SystemConfig::new(k, n, u)?)
    }

    /// Zero-based desired index, validated against `system`.
    pub fn theta_index(&self, system: &SystemConfig) -> Result<usize> {
        let theta = self.theta.ok_or_else(|| anyhow!("--theta is required"))?;
        if theta == 0 || theta > system.messages() {
            return Err(anyhow!("--theta must be in 1..={}", system.messages()));
        }
        Ok(theta - 1)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| anyhow!("--seed is required; runs never default to the clock"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: ExperimentConfig =
            serde_json::from_str(r#"{"K": 3, "N": 2, "U": 2, "theta": 2, "seed": 9}"#).unwrap();
        let flags = ExperimentConfig { theta: Some(1), ..Default::default() };
        let merged = flags.or(file);
        let sys = merged.system().unwrap();
        assert_eq!(sys.sources(), 3);
        assert_eq!(merged.theta_index(&sys).unwrap(), 0);
        assert_eq!(merged.seed().unwrap(), 9);
    }

    #[test]
    fn validation() {
        let c = ExperimentConfig { messages: Some(2), databases: Some(1), users: Some(2), theta: Some(3), ..Default::default() };
        let sys = c.system().unwrap();
        assert!(c.theta_index(&sys).is_err());
        assert!(c.seed().is_err());
        assert!(ExperimentConfig { messages: Some(0), databases: Some(1), users: Some(1), ..Default::default() }
            .system()
            .is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"k": 1}"#).is_err());
    }
}
