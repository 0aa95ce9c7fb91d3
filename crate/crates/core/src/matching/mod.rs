//! Five-step instance matching between a reference and a target frame:
//!
//! 1. HDBSCAN over the features of all candidates of both frames;
//! 2. pruning of low-quality candidates (noise points are dropped too);
//! 3. per-frame spatial splitting of each cluster with elbow k-means;
//! 4. largest-mask selection within every sub-cluster;
//! 5. greedy assignment of the selected instances on feature distance.

mod greedy;
mod hdbscan;
mod kmeans;
mod params;

pub use greedy::{greedy_match, MatchPair, MatchSet};
pub use hdbscan::{hdbscan_cluster, hdbscan_points, ClusterLabel};
pub use kmeans::{elbow_split, kmeans, split_cluster_spatially, ElbowSplit, KMeans};
pub use params::MatchingParams;

use std::collections::BTreeMap;

use crate::{Error, Frame, InstanceCandidate, Result};

/// Keeps candidates meeting all three thresholds; equality passes.
pub fn prune_candidates(
    candidates: &[InstanceCandidate],
    params: &MatchingParams,
) -> Vec<InstanceCandidate> {
    candidates
        .iter()
        .filter(|c| passes_thresholds(c, params))
        .cloned()
        .collect()
}

fn passes_thresholds(c: &InstanceCandidate, params: &MatchingParams) -> bool {
    !(c.objectness() < params.min_objectness
        || c.mask_score() < params.min_mask_score
        || (c.area() as f64) < params.min_area)
}

/// Member with the largest mask area; ties go to the lowest id.
pub fn select_best_instance(sub_cluster: &[InstanceCandidate]) -> Result<InstanceCandidate> {
    sub_cluster
        .iter()
        .min_by(|a, b| b.area().cmp(&a.area()).then(a.id().cmp(&b.id())))
        .cloned()
        .ok_or(Error::EmptyInput("sub-cluster"))
}

/// Counts collected while running [`match_instances_traced`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchTrace {
    pub candidates_ref: usize,
    pub candidates_tgt: usize,
    pub clusters: usize,
    pub noise: usize,
    pub pruned: usize,
    pub subclusters_ref: usize,
    pub subclusters_tgt: usize,
}

pub fn match_instances(
    reference: &[InstanceCandidate],
    target: &[InstanceCandidate],
    params: &MatchingParams,
) -> MatchSet {
    match_instances_traced(reference, target, params).0
}

pub fn match_instances_traced(
    reference: &[InstanceCandidate],
    target: &[InstanceCandidate],
    params: &MatchingParams,
) -> (MatchSet, MatchTrace) {
    let mut trace = MatchTrace {
        candidates_ref: reference.len(),
        candidates_tgt: target.len(),
        ..Default::default()
    };
    let all: Vec<&InstanceCandidate> = reference.iter().chain(target).collect();
    if all.is_empty() {
        return (MatchSet::default(), trace);
    }

    let features: Vec<&[f64]> = all.iter().map(|c| c.feature().as_slice()).collect();
    let labels = hdbscan_points(&features, params.hdbscan_min_cluster_size.max(2))
        .expect("candidate features are nonempty and 256-D");

    let mut clusters: BTreeMap<usize, (Vec<InstanceCandidate>, Vec<InstanceCandidate>)> =
        BTreeMap::new();
    for (cand, label) in all.iter().zip(&labels) {
        let Some(cluster) = label.cluster() else {
            trace.noise += 1;
            continue;
        };
        let entry = clusters.entry(cluster).or_default();
        if !passes_thresholds(cand, params) {
            trace.pruned += 1;
            continue;
        }
        match cand.frame() {
            Frame::Reference => entry.0.push((*cand).clone()),
            Frame::Target => entry.1.push((*cand).clone()),
        }
    }
    trace.clusters = clusters.len();

    let mut best_ref = Vec::new();
    let mut best_tgt = Vec::new();
    for (members_ref, members_tgt) in clusters.values() {
        for (members, best, count) in [
            (members_ref, &mut best_ref, &mut trace.subclusters_ref),
            (members_tgt, &mut best_tgt, &mut trace.subclusters_tgt),
        ] {
            if members.is_empty() {
                continue;
            }
            let subs =
                split_cluster_spatially(members, params.cluster_compactness, params.kmeans_max_k);
            *count += subs.len();
            for sub in &subs {
                best.push(select_best_instance(sub).expect("sub-clusters are nonempty"));
            }
        }
    }
    (
        greedy_match(&best_ref, &best_tgt, params.max_feature_distance),
        trace,
    )
}
