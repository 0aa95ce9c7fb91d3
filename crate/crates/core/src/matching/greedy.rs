use serde::{Deserialize, Serialize};

use crate::{CandidateId, InstanceCandidate, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    #[serde(rename = "ref")]
    pub ref_id: CandidateId,
    #[serde(rename = "tgt")]
    pub tgt_id: CandidateId,
    #[serde(rename = "dist")]
    pub distance: f64,
}

/// Reference/target correspondences plus the candidates left unmatched.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchSet {
    pub pairs: Vec<MatchPair>,
    pub unmatched_ref: Vec<CandidateId>,
    pub unmatched_tgt: Vec<CandidateId>,
}

impl MatchSet {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Pairs as `(ref_id, tgt_id)`, in acceptance order.
    pub fn id_pairs(&self) -> Vec<(CandidateId, CandidateId)> {
        self.pairs.iter().map(|p| (p.ref_id, p.tgt_id)).collect()
    }
}

/// Greedy cross-frame assignment on L2 feature distance.
///
/// Pairs are visited in ascending distance (ties by `(ref_id, tgt_id)`);
/// a pair is accepted when both sides are still free. The scan stops once
/// either side is used up or the distance exceeds `max_distance`.
pub fn greedy_match(
    best_ref: &[InstanceCandidate],
    best_tgt: &[InstanceCandidate],
    max_distance: f64,
) -> MatchSet {
    let mut candidates = Vec::with_capacity(best_ref.len() * best_tgt.len());
    for (i, r) in best_ref.iter().enumerate() {
        for (j, t) in best_tgt.iter().enumerate() {
            candidates.push((r.feature().l2_distance(t.feature()), i, j));
        }
    }
    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(best_ref[a.1].id().cmp(&best_ref[b.1].id()))
            .then(best_tgt[a.2].id().cmp(&best_tgt[b.2].id()))
    });

    let mut ref_used = vec![false; best_ref.len()];
    let mut tgt_used = vec![false; best_tgt.len()];
    let limit = best_ref.len().min(best_tgt.len());
    let mut pairs = Vec::with_capacity(limit);
    for (d, i, j) in candidates {
        if pairs.len() == limit || d > max_distance {
            break;
        }
        if ref_used[i] || tgt_used[j] {
            continue;
        }
        ref_used[i] = true;
        tgt_used[j] = true;
        pairs.push(MatchPair {
            ref_id: best_ref[i].id(),
            tgt_id: best_tgt[j].id(),
            distance: d,
        });
    }
    MatchSet {
        pairs,
        unmatched_ref: leftovers(best_ref, &ref_used),
        unmatched_tgt: leftovers(best_tgt, &tgt_used),
    }
}

fn leftovers(cands: &[InstanceCandidate], used: &[bool]) -> Vec<CandidateId> {
    cands
        .iter()
        .zip(used)
        .filter(|(_, &u)| !u)
        .map(|(c, _)| c.id())
        .collect()
}
