use std::path::Path;

use anyhow::{Context, Result};
use objmotion::eval::EvalConfig;
use objmotion::flowfield::PyramidInjectionConfig;
use objmotion::matching::MatchingParams;
use objmotion::synthgen::{CandidateNoiseSpec, SceneSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub scene: SceneSpec,
    pub noise: CandidateNoiseSpec,
}

/// Every knob of a run. Matching thresholds sit at the top level; the other
/// groups live under `injection`, `eval` and `generator`. Missing keys take
/// their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub matching: MatchingParams,
    pub injection: PyramidInjectionConfig,
    pub eval: EvalConfig,
    pub generator: GeneratorConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).context("malformed config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                Self::from_json(&text).with_context(|| format!("in config {}", p.display()))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.matching.validate()?;
        self.injection.validate()?;
        self.eval.validate()?;
        self.generator.scene.validate()?;
        self.generator.noise.validate()?;
        Ok(())
    }

    /// Applies `--seed` to the generator and the matcher.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.generator.scene.seed = s;
            self.generator.noise.seed = s;
            self.matching.seed = s;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn matching_keys_at_top_level() {
        let cfg = RunConfig::from_json(
            r#"{"min_area": 10, "injection": {"alphas": {"4": 0.5}}, "eval": {"exclusion_limit": 500}}"#,
        )
        .unwrap();
        assert_eq!(cfg.matching.min_area, 10.0);
        assert_eq!(cfg.matching.min_mask_score, 0.9);
        assert_eq!(cfg.injection.alphas.len(), 1);
        assert_eq!(cfg.eval.exclusion_limit, 500.0);
        let back = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(RunConfig::from_json(r#"{"eval": {"bin_edges": [0, 60, 10]}}"#).is_err());
    }
}
