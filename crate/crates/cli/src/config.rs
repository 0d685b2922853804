//! Experiment configuration files (TOML).
//!
//! ```toml
//! [urn]
//! blue_initial = 1.0
//! red_initial = 1.0
//! increment = 1.0
//!
//! [cohort]
//! population = 1000
//! horizon = 50
//! seed = 7
//!
//! [[groups]]
//! name = "a"
//! fraction = 0.5
//!
//! [[groups]]
//! name = "b"
//! fraction = 0.5
//! bias = 0.01
//!
//! [snapshot]
//! time = 1
//! lookahead = 1
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use seqrisk::validation::{BootstrapSettings, SnapshotSpec};
use seqrisk::{CohortConfig, GroupSpec, UrnParameters};

use crate::io::Format;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config at `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UrnSection {
    #[serde(default = "one")]
    pub blue_initial: f64,
    #[serde(default = "one")]
    pub red_initial: f64,
    #[serde(default = "one")]
    pub increment: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for UrnSection {
    fn default() -> Self {
        UrnSection {
            blue_initial: 1.0,
            red_initial: 1.0,
            increment: 1.0,
        }
    }
}

impl UrnSection {
    fn to_params(&self, field: &str) -> Result<UrnParameters, ConfigError> {
        UrnParameters::new(self.blue_initial, self.red_initial, self.increment)
            .map_err(|e| ConfigError::invalid(field, e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSection {
    pub population: usize,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub record_full_paths: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    pub name: String,
    pub fraction: f64,
    #[serde(default)]
    pub bias: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_override: Option<UrnSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotSection {
    #[serde(default = "one_usize")]
    pub time: usize,
    #[serde(default = "one_usize")]
    pub lookahead: usize,
    #[serde(default = "ten")]
    pub bins: usize,
    #[serde(default = "half")]
    pub threshold: f64,
}

fn one_usize() -> usize {
    1
}

fn ten() -> usize {
    10
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplifySection {
    #[serde(default = "thousand")]
    pub resamples: usize,
    #[serde(default = "ninety_nine")]
    pub confidence: f64,
    #[serde(default)]
    pub seed: u64,
}

fn thousand() -> usize {
    1000
}

fn ninety_nine() -> f64 {
    0.99
}

impl Default for AmplifySection {
    fn default() -> Self {
        AmplifySection {
            resamples: 1000,
            confidence: 0.99,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    #[serde(default = "two_hundred")]
    pub repetitions: usize,
    #[serde(default = "five_percent")]
    pub alpha: f64,
    /// Per-run population for the power study; defaults to the cohort's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<usize>,
}

fn two_hundred() -> usize {
    200
}

fn five_percent() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub urn: UrnSection,
    pub cohort: CohortSection,
    #[serde(default)]
    pub groups: Vec<GroupSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<SnapshotSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub amplify: AmplifySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<PowerSection>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.cohort_config()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Groups as configured, or a single unbiased group when none are given.
    pub fn effective_groups(&self) -> Vec<GroupSection> {
        if self.groups.is_empty() {
            vec![GroupSection {
                name: "all".into(),
                fraction: 1.0,
                bias: 0.0,
                initial_override: None,
            }]
        } else {
            self.groups.clone()
        }
    }

    pub fn cohort_config(&self) -> Result<CohortConfig, ConfigError> {
        let params = self.urn.to_params("urn")?;
        let groups = self
            .effective_groups()
            .into_iter()
            .enumerate()
            .map(|(i, g)| {
                let initial_override = g
                    .initial_override
                    .as_ref()
                    .map(|u| u.to_params(&format!("groups[{i}].initial_override")))
                    .transpose()?;
                Ok(GroupSpec {
                    name: g.name,
                    fraction: g.fraction,
                    bias: g.bias,
                    initial_override,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let cfg = CohortConfig {
            population: self.cohort.population,
            horizon: self.cohort.horizon,
            params,
            groups,
            master_seed: self.cohort.seed,
            record_full_paths: self.cohort.record_full_paths,
        };
        cfg.validate().map_err(core_to_config)?;
        Ok(cfg)
    }

    pub fn snapshot_spec(&self) -> Result<SnapshotSpec, ConfigError> {
        let s = self
            .snapshot
            .as_ref()
            .ok_or_else(|| ConfigError::invalid("snapshot", "section is required for this command"))?;
        let spec = SnapshotSpec {
            time: s.time,
            lookahead: s.lookahead,
            bins: s.bins,
            threshold: s.threshold,
        };
        spec.validate(self.cohort.horizon).map_err(|e| match e {
            seqrisk::Error::LookaheadExceedsHorizon { .. } => {
                ConfigError::invalid("snapshot.lookahead", e.to_string())
            }
            other => core_to_config(other),
        })?;
        Ok(spec)
    }

    pub fn bootstrap(&self) -> BootstrapSettings {
        BootstrapSettings {
            resamples: self.amplify.resamples,
            confidence: self.amplify.confidence,
            seed: self.amplify.seed,
        }
    }
}

fn core_to_config(e: seqrisk::Error) -> ConfigError {
    match e {
        seqrisk::Error::InvalidConfig { field, reason } => ConfigError::Invalid { field, reason },
        other => ConfigError::invalid("config", other.to_string()),
    }
}

/// Bundled example configurations.
pub const PRESETS: [(&str, &str); 6] = [
    ("concentrated", include_str!("../presets/concentrated.toml")),
    ("polarized", include_str!("../presets/polarized.toml")),
    ("calibration", include_str!("../presets/calibration.toml")),
    ("parity-null", include_str!("../presets/parity-null.toml")),
    ("amplify-bias", include_str!("../presets/amplify-bias.toml")),
    ("amplify-null", include_str!("../presets/amplify-null.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
