//! Experiment configuration documents (TOML).
//!
//! A minimal document names the algorithm and the environment; every other
//! field has a default:
//!
//! ```toml
//! algorithm = "cucrl2"
//!
//! [environment]
//! kind = "inventory"
//! ```

use serde::{Deserialize, Serialize};

use crate::confidence::ConfidenceFamily;
use crate::envs::{GridworldSpec, InventorySpec};
use crate::error::{Error, Result};
use crate::evi::DEFAULT_MAX_ITERS;
use crate::ucrl::ConditionForm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Avg,
    Fh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ucrl2,
    Cucrl2,
    Ucbvi,
    Cucbvi,
    BaselineOnly,
}

impl Algorithm {
    pub fn setting(self) -> Option<Setting> {
        match self {
            Algorithm::Ucrl2 | Algorithm::Cucrl2 => Some(Setting::Avg),
            Algorithm::Ucbvi | Algorithm::Cucbvi => Some(Setting::Fh),
            Algorithm::BaselineOnly => None,
        }
    }

    pub fn is_conservative(self) -> bool {
        matches!(self, Algorithm::Cucrl2 | Algorithm::Cucbvi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Environment {
    Inventory(InventorySpec),
    Gridworld(GridworldSpec),
}

impl Environment {
    pub fn setting(&self) -> Setting {
        match self {
            Environment::Inventory(_) => Setting::Avg,
            Environment::Gridworld(_) => Setting::Fh,
        }
    }
}

/// `(sigma, Sigma)` baseline of the inventory environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InventoryBaseline {
    pub threshold: usize,
    pub target: usize,
}

impl Default for InventoryBaseline {
    fn default() -> Self {
        Self { threshold: 4, target: 4 }
    }
}

fn default_delta() -> f64 {
    0.1
}
fn default_alpha() -> f64 {
    0.05
}
fn default_noise() -> f64 {
    0.1
}
fn default_runs() -> usize {
    20
}
fn default_steps() -> u64 {
    70_000
}
fn default_episodes() -> usize {
    3_000
}
fn default_true() -> bool {
    true
}
fn default_max_evi_iters() -> usize {
    DEFAULT_MAX_ITERS
}
fn default_family() -> ConfidenceFamily {
    ConfidenceFamily::Bernstein
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Inferred from the environment when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setting: Option<Setting>,
    pub algorithm: Algorithm,
    pub environment: Environment,
    #[serde(default)]
    pub baseline: InventoryBaseline,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_family")]
    pub confidence: ConfidenceFamily,
    /// Time steps per run (average reward).
    #[serde(default = "default_steps")]
    pub steps: u64,
    /// Episodes per run (finite horizon).
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Multiplicative reward-noise coefficient.
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default)]
    pub reevaluate_past: bool,
    #[serde(default = "default_true")]
    pub baseline_known: bool,
    #[serde(default = "default_true")]
    pub clip_values: bool,
    #[serde(default)]
    pub condition_form: ConditionForm,
    #[serde(default = "default_max_evi_iters")]
    pub max_evi_iters: usize,
    /// Defaults to stock 0 or the gridworld start cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_state: Option<usize>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn resolved_setting(&self) -> Setting {
        self.environment.setting()
    }

    pub fn validate(&self) -> Result<()> {
        let env_setting = self.environment.setting();
        if let Some(s) = self.setting {
            if s != env_setting {
                return Err(Error::InvalidConfig(format!(
                    "setting: {s:?} does not match the {env_setting:?} environment"
                )));
            }
        }
        if let Some(s) = self.algorithm.setting() {
            if s != env_setting {
                return Err(Error::InvalidConfig(format!(
                    "algorithm: {:?} cannot run on the {env_setting:?} environment",
                    self.algorithm
                )));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha: must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta: must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::InvalidConfig(format!("noise: must be nonnegative, got {}", self.noise)));
        }
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs: must be at least 1".into()));
        }
        if self.steps == 0 || self.episodes == 0 {
            return Err(Error::InvalidConfig("steps and episodes must be at least 1".into()));
        }
        if self.max_evi_iters == 0 {
            return Err(Error::InvalidConfig("max_evi_iters: must be positive".into()));
        }
        match &self.environment {
            Environment::Inventory(spec) => {
                spec.demand_probabilities()
                    .map_err(|e| Error::InvalidConfig(format!("environment.demand: {e}")))?;
                if self.baseline.threshold > spec.capacity || self.baseline.target > spec.capacity {
                    return Err(Error::InvalidConfig("baseline: threshold and target must not exceed capacity".into()));
                }
                if let Some(s) = self.start_state {
                    if s > spec.capacity {
                        return Err(Error::InvalidConfig(format!("start_state: {s} out of range")));
                    }
                }
            }
            Environment::Gridworld(spec) => {
                spec.validate()
                    .map_err(|e| Error::InvalidConfig(format!("environment: {e}")))?;
                if let Some(s) = self.start_state {
                    if s >= spec.n_states() {
                        return Err(Error::InvalidConfig(format!("start_state: {s} out of range")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn start_state(&self) -> usize {
        match (&self.environment, self.start_state) {
            (_, Some(s)) => s,
            (Environment::Inventory(_), None) => 0,
            (Environment::Gridworld(spec), None) => spec.state(spec.start),
        }
    }
}
