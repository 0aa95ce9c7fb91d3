use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Thresholds and clustering knobs for [`super::match_instances`].
///
/// The defaults for the five thresholds are the grid-searched values for
/// the object dataset: min area 1500 px², mask score 0.9, objectness 0.9,
/// cluster compactness 4000 px², max feature distance 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchingParams {
    /// Minimum mask area in pixels.
    pub min_area: f64,
    pub min_mask_score: f64,
    pub min_objectness: f64,
    /// Upper bound on k-means inertia (px²) of a per-frame sub-cluster.
    pub cluster_compactness: f64,
    /// Largest L2 feature distance accepted by the greedy matcher.
    pub max_feature_distance: f64,
    pub hdbscan_min_cluster_size: usize,
    pub kmeans_max_k: usize,
    pub seed: u64,
}

impl Default for MatchingParams {
    fn default() -> Self {
        Self {
            min_area: 1500.0,
            min_mask_score: 0.9,
            min_objectness: 0.9,
            cluster_compactness: 4000.0,
            max_feature_distance: 2.0,
            hdbscan_min_cluster_size: 2,
            kmeans_max_k: 8,
            seed: 0,
        }
    }
}

impl MatchingParams {
    pub fn validate(&self) -> Result<()> {
        let thresholds = [
            ("min_area", self.min_area),
            ("min_mask_score", self.min_mask_score),
            ("min_objectness", self.min_objectness),
            ("cluster_compactness", self.cluster_compactness),
            ("max_feature_distance", self.max_feature_distance),
        ];
        for (name, v) in thresholds {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        if self.hdbscan_min_cluster_size < 2 {
            return Err(Error::InvalidConfig(
                "hdbscan_min_cluster_size must be >= 2".into(),
            ));
        }
        if self.kmeans_max_k < 1 {
            return Err(Error::InvalidConfig("kmeans_max_k must be >= 1".into()));
        }
        Ok(())
    }

    /// Parses a JSON object; absent fields keep their defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let params: MatchingParams = serde_json::from_str(text)?;
        params.validate()?;
        Ok(params)
    }
}
