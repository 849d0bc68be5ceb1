//! Whole-run configuration: every module's knobs plus the single root
//! seed that feeds all randomness.

use serde::{Deserialize, Serialize};

use crate::coding::CodingConfig;
use crate::complexity::ComplexityConfig;
use crate::compose::ValidatorMode;
use crate::decompose::DecomposeConfig;
use crate::error::Result;
use crate::hierarchy::HierarchyConfig;

/// Name of the PRNG algorithm recorded in every output for cross-run and
/// cross-language reproducibility.
pub const PRNG_NAME: &str = "chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeSettings {
    pub mode: ValidatorMode,
    /// Novelty threshold; when absent the median nearest-neighbour
    /// distance of the training corpus is used.
    pub theta: Option<f64>,
}

impl Default for ComposeSettings {
    fn default() -> Self {
        Self {
            mode: ValidatorMode::CoefficientRange,
            theta: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Root seed. Overrides the decompose config's seed so a single value
    /// governs the whole run.
    pub seed: u64,
    pub coding: CodingConfig,
    pub complexity: ComplexityConfig,
    pub decompose: DecomposeConfig,
    pub hierarchy: HierarchyConfig,
    pub compose: ComposeSettings,
}

impl RunConfig {
    /// Parse and validate; unknown keys are rejected by the schema.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.coding.validate()?;
        self.complexity.validate()?;
        self.decompose.validate()?;
        self.hierarchy.validate()?;
        Ok(())
    }

    /// Decompose config with the run seed applied.
    pub fn effective_decompose(&self) -> DecomposeConfig {
        let mut cfg = self.decompose.clone();
        cfg.seed = self.seed;
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"seed": 1, "nonsense": true}"#;
        assert!(RunConfig::from_json(text).is_err());
    }

    #[test]
    fn partial_configs_fill_defaults() {
        let text = r#"{"seed": 9}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.coding, CodingConfig::default());
        assert_eq!(cfg.effective_decompose().seed, 9);
    }

    #[test]
    fn invalid_nested_config_is_rejected() {
        let text = r#"{"decompose": {"epsilon": -1.0, "n_range": [2, 3], "restarts": 1,
                        "delta_d": 0.0, "max_iters": 5, "seed": 0, "tau": 0.1}}"#;
        assert!(RunConfig::from_json(text).is_err());
    }
}
