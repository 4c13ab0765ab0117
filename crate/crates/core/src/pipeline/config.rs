use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::provider::ProviderKind;
use crate::spdzsim::{SimConfig, DEFAULT_F, DEFAULT_K};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PatternMatch {
    #[default]
    On,
    Off,
}

impl PatternMatch {
    pub fn is_on(self) -> bool {
        self == PatternMatch::On
    }
}

impl std::str::FromStr for PatternMatch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "on" => Ok(PatternMatch::On),
            "off" => Ok(PatternMatch::Off),
            _ => Err(format!("expected on or off, got {s}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPoint {
    pub f: u32,
    pub k: u32,
}

impl Default for FixedPoint {
    fn default() -> Self {
        Self { f: DEFAULT_F, k: DEFAULT_K }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Samples per entry.
    #[serde(rename = "repitition", alias = "repetition")]
    pub repetition: u32,
    pub max_feedback: u32,
    pub temperature: f64,
    pub pattern_match: PatternMatch,
    pub fixed_point: FixedPoint,
    pub provider: ProviderKind,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            repetition: 2,
            max_feedback: 3,
            temperature: 0.7,
            pattern_match: PatternMatch::On,
            fixed_point: FixedPoint::default(),
            provider: ProviderKind::Deterministic,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config: {0}")]
    Invalid(String),
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: PipelineConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.repetition == 0 {
            return Err(ConfigError::Invalid("repetition must be at least 1".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ConfigError::Invalid(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        let FixedPoint { f, k } = self.fixed_point;
        if f == 0 || k <= f || k > 120 {
            return Err(ConfigError::Invalid(format!("need 0 < f < k <= 120, got f={f} k={k}")));
        }
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            f: self.fixed_point.f,
            k: self.fixed_point.k,
            ..SimConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PipelineConfig::from_toml("").unwrap();
        assert_eq!(c, PipelineConfig::default());
        assert_eq!((c.repetition, c.max_feedback, c.temperature), (2, 3, 0.7));
        assert_eq!((c.fixed_point.f, c.fixed_point.k), (16, 31));
    }

    #[test]
    fn both_spellings_of_repetition() {
        assert_eq!(PipelineConfig::from_toml("repitition = 5").unwrap().repetition, 5);
        assert_eq!(PipelineConfig::from_toml("repetition = 4").unwrap().repetition, 4);
        let out = toml::to_string(&PipelineConfig::default()).unwrap();
        assert!(out.contains("repitition = 2"));
    }

    #[test]
    fn providers_parse() {
        let c = PipelineConfig::from_toml("pattern_match = \"off\"\n[provider]\nkind = \"mock\"\nfixture = \"a.jsonl\"\n").unwrap();
        assert_eq!(c.pattern_match, PatternMatch::Off);
        assert_eq!(c.provider, ProviderKind::Mock { fixture: "a.jsonl".into() });
        let c = PipelineConfig::from_toml(
            "[provider]\nkind = \"remote\"\nendpoint = \"http://x\"\nmodel = \"m\"\nkey_env = \"K\"\n",
        )
        .unwrap();
        assert!(matches!(c.provider, ProviderKind::Remote { min_interval_ms: 0, .. }));
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(PipelineConfig::from_toml("repitition = 0").is_err());
        assert!(PipelineConfig::from_toml("[fixed_point]\nf = 20\nk = 16\n").is_err());
        assert!(PipelineConfig::from_toml("unknown = 1").is_err());
        assert!(PipelineConfig::from_toml("temperature = -1.0").is_err());
    }
}
