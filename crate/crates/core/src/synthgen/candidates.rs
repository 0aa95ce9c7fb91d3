use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SceneTruth;
use crate::{
    BinaryMask, CandidateDocument, CandidateId, Error, FeatureVector, Frame, InstanceCandidate,
    Result, FEATURE_DIM,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CandidateNoiseSpec {
    /// Per-component standard deviation added to each latent feature.
    pub feature_sigma: f64,
    /// Chance that an object gets one extra, smaller candidate in a frame.
    pub duplicate_rate: f64,
    /// Total number of spurious candidates, spread over both frames.
    pub false_positive_count: usize,
    pub mask_erosion_px: usize,
    pub score_range: [f64; 2],
    pub false_positive_score_range: [f64; 2],
    /// Radius bounds of the disc-shaped false-positive masks.
    pub false_positive_radius_range: [f64; 2],
    pub seed: u64,
}

impl Default for CandidateNoiseSpec {
    fn default() -> Self {
        Self {
            feature_sigma: 0.02,
            duplicate_rate: 0.5,
            false_positive_count: 3,
            mask_erosion_px: 1,
            score_range: [0.9, 1.0],
            false_positive_score_range: [0.1, 0.5],
            false_positive_radius_range: [4.0, 10.0],
            seed: 0,
        }
    }
}

impl CandidateNoiseSpec {
    /// Exact masks and latent features, no duplicates or false positives.
    pub fn noiseless() -> Self {
        Self {
            feature_sigma: 0.0,
            duplicate_rate: 0.0,
            false_positive_count: 0,
            mask_erosion_px: 0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.feature_sigma.is_finite() && self.feature_sigma >= 0.0) {
            return bad("feature_sigma must be finite and >= 0");
        }
        if !(0.0..=1.0).contains(&self.duplicate_rate) {
            return bad("duplicate_rate must lie in [0, 1]");
        }
        for (name, [lo, hi]) in [
            ("score_range", self.score_range),
            (
                "false_positive_score_range",
                self.false_positive_score_range,
            ),
        ] {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return bad(&format!("{name} must satisfy 0 <= lo <= hi <= 1"));
            }
        }
        let [lo, hi] = self.false_positive_radius_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return bad("false_positive_radius_range must satisfy 0 <= lo <= hi");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidateSource {
    Primary { object: u16 },
    Duplicate { object: u16 },
    FalsePositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourcedCandidate {
    pub id: CandidateId,
    #[serde(flatten)]
    pub source: CandidateSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCandidates {
    pub width: usize,
    pub height: usize,
    pub reference: Vec<InstanceCandidate>,
    pub target: Vec<InstanceCandidate>,
    /// Primary reference candidate paired with the primary target candidate
    /// of every object visible in both frames, sorted by reference id.
    pub gt_matching: Vec<(CandidateId, CandidateId)>,
    /// Origin of every candidate, sorted by id.
    pub sources: Vec<SourcedCandidate>,
    /// Unit-norm latent feature of every object, in object order.
    pub latents: Vec<Vec<f64>>,
    /// Smallest pairwise latent distance; `None` with fewer than two objects.
    pub min_latent_distance: Option<f64>,
}

impl SyntheticCandidates {
    pub fn document(&self) -> CandidateDocument {
        CandidateDocument {
            width: self.width,
            height: self.height,
            candidates: self.reference.iter().chain(&self.target).cloned().collect(),
        }
    }

    pub fn source_of(&self, id: CandidateId) -> Option<CandidateSource> {
        self.sources
            .binary_search_by_key(&id, |s| s.id)
            .ok()
            .map(|i| self.sources[i].source)
    }
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..FEATURE_DIM)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn disc(width: usize, height: usize, cx: f64, cy: f64, r: f64) -> BinaryMask {
    let mut m = BinaryMask::new(width, height).expect("canvas dims are positive");
    for y in 0..height {
        for x in 0..width {
            if (x as f64 - cx).hypot(y as f64 - cy) <= r {
                m.set(x, y, true);
            }
        }
    }
    m
}

struct Draft {
    frame: Frame,
    mask: BinaryMask,
    feature: Vec<f64>,
    objectness: f64,
    mask_score: f64,
    source: CandidateSource,
}

/// Emits noisy detector output for a scene. Every object visible in a
/// frame yields one primary candidate with its ground-truth mask eroded by
/// `mask_erosion_px`, and possibly a duplicate eroded by one or two more
/// pixels. Candidates of each frame are shuffled, then numbered: reference
/// ids first, target ids after.
pub fn synthesize_candidates(
    truth: &SceneTruth,
    noise: &CandidateNoiseSpec,
) -> Result<SyntheticCandidates> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let latents: Vec<Vec<f64>> = truth
        .objects
        .iter()
        .map(|_| unit_vector(&mut rng))
        .collect();
    let mut min_latent_distance: Option<f64> = None;
    for i in 0..latents.len() {
        for j in i + 1..latents.len() {
            let d = l2(&latents[i], &latents[j]);
            min_latent_distance = Some(min_latent_distance.map_or(d, |m| m.min(d)));
        }
    }
    let gauss = Normal::new(0.0, noise.feature_sigma).expect("sigma validated");
    let noisy = |rng: &mut ChaCha8Rng, latent: &[f64]| -> Vec<f64> {
        if noise.feature_sigma == 0.0 {
            latent.to_vec()
        } else {
            latent.iter().map(|&v| v + gauss.sample(rng)).collect()
        }
    };

    let mut drafts: Vec<Draft> = Vec::new();
    for frame in [Frame::Reference, Frame::Target] {
        for (obj, latent) in truth.objects.iter().zip(&latents) {
            let gt = match frame {
                Frame::Reference => truth.mask_ref(obj.id),
                Frame::Target => truth.mask_tgt(obj.id),
            };
            if gt.is_empty() {
                continue;
            }
            let mut mask = gt.eroded(noise.mask_erosion_px);
            if mask.is_empty() {
                mask = gt;
            }
            let feature = noisy(&mut rng, latent);
            drafts.push(Draft {
                frame,
                feature,
                objectness: uniform(&mut rng, noise.score_range),
                mask_score: uniform(&mut rng, noise.score_range),
                source: CandidateSource::Primary { object: obj.id },
                mask: mask.clone(),
            });
            if rng.random_bool(noise.duplicate_rate) {
                let extra = rng.random_range(1..=2);
                let dup = mask.eroded(extra);
                if !dup.is_empty() {
                    let feature = noisy(&mut rng, latent);
                    drafts.push(Draft {
                        frame,
                        mask: dup,
                        feature,
                        objectness: uniform(&mut rng, noise.score_range),
                        mask_score: uniform(&mut rng, noise.score_range),
                        source: CandidateSource::Duplicate { object: obj.id },
                    });
                }
            }
        }
    }
    for _ in 0..noise.false_positive_count {
        let frame = if rng.random_bool(0.5) {
            Frame::Reference
        } else {
            Frame::Target
        };
        let cx = rng.random_range(0..truth.width) as f64;
        let cy = rng.random_range(0..truth.height) as f64;
        let r = uniform(&mut rng, noise.false_positive_radius_range);
        drafts.push(Draft {
            frame,
            mask: disc(truth.width, truth.height, cx, cy, r),
            feature: unit_vector(&mut rng),
            objectness: uniform(&mut rng, noise.false_positive_score_range),
            mask_score: uniform(&mut rng, noise.false_positive_score_range),
            source: CandidateSource::FalsePositive,
        });
    }

    let (mut ref_drafts, mut tgt_drafts): (Vec<Draft>, Vec<Draft>) = drafts
        .into_iter()
        .partition(|d| d.frame == Frame::Reference);
    ref_drafts.shuffle(&mut rng);
    tgt_drafts.shuffle(&mut rng);

    let mut sources = Vec::new();
    let mut build = |drafts: Vec<Draft>, first_id: u64| -> Result<Vec<InstanceCandidate>> {
        drafts
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                let id = CandidateId(first_id + i as u64);
                sources.push(SourcedCandidate {
                    id,
                    source: d.source,
                });
                InstanceCandidate::new(
                    id,
                    d.frame,
                    d.mask,
                    d.objectness,
                    d.mask_score,
                    FeatureVector::new(d.feature)?,
                )
            })
            .collect()
    };
    let n_ref = ref_drafts.len() as u64;
    let reference = build(ref_drafts, 0)?;
    let target = build(tgt_drafts, n_ref)?;

    let primary = |id: CandidateId, object: u16| matches!(sources[id.0 as usize].source, CandidateSource::Primary { object: o } if o == object);
    let mut gt_matching = Vec::new();
    for &(a, b) in &truth.correspondences {
        let r = reference.iter().find(|c| primary(c.id(), a));
        let t = target.iter().find(|c| primary(c.id(), b));
        if let (Some(r), Some(t)) = (r, t) {
            gt_matching.push((r.id(), t.id()));
        }
    }
    gt_matching.sort();

    Ok(SyntheticCandidates {
        width: truth.width,
        height: truth.height,
        reference,
        target,
        gt_matching,
        sources,
        latents,
        min_latent_distance,
    })
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{greedy_match, prune_candidates, select_best_instance, MatchingParams};
    use crate::synthgen::{generate_scene, SceneSpec};

    fn scene() -> SceneTruth {
        generate_scene(&SceneSpec::small()).unwrap().2
    }

    #[test]
    fn noiseless_features_equal_latents() {
        let t = scene();
        let c = synthesize_candidates(&t, &CandidateNoiseSpec::noiseless()).unwrap();
        assert_eq!(c.reference.len(), 3);
        assert_eq!(c.target.len(), 3);
        for cand in c.reference.iter().chain(&c.target) {
            let Some(CandidateSource::Primary { object }) = c.source_of(cand.id()) else {
                panic!("noiseless run emitted a non-primary candidate");
            };
            assert_eq!(
                cand.feature().as_slice(),
                &c.latents[object as usize - 1][..]
            );
        }
        let m = greedy_match(&c.reference, &c.target, 1e-9);
        let mut pairs = m.id_pairs();
        pairs.sort();
        assert_eq!(pairs, c.gt_matching);
    }

    #[test]
    fn false_positives_are_pruned() {
        let t = scene();
        let noise = CandidateNoiseSpec {
            false_positive_count: 5,
            duplicate_rate: 0.0,
            ..Default::default()
        };
        let c = synthesize_candidates(&t, &noise).unwrap();
        let all: Vec<_> = c.reference.iter().chain(&c.target).cloned().collect();
        let params = MatchingParams {
            min_area: 1.0,
            ..Default::default()
        };
        let kept = prune_candidates(&all, &params);
        assert_eq!(all.len() - kept.len(), 5);
        assert!(kept
            .iter()
            .all(|k| c.source_of(k.id()) != Some(CandidateSource::FalsePositive)));
    }

    #[test]
    fn duplicates_lose_to_primary() {
        let t = scene();
        let noise = CandidateNoiseSpec {
            duplicate_rate: 1.0,
            false_positive_count: 0,
            ..Default::default()
        };
        let c = synthesize_candidates(&t, &noise).unwrap();
        for obj in &t.objects {
            for frame in [&c.reference, &c.target] {
                let group: Vec<_> = frame
                    .iter()
                    .filter(|k| {
                        matches!(
                            c.source_of(k.id()),
                            Some(CandidateSource::Primary { object } | CandidateSource::Duplicate { object })
                                if object == obj.id
                        )
                    })
                    .cloned()
                    .collect();
                assert!(group.len() >= 2);
                let best = select_best_instance(&group).unwrap();
                assert_eq!(
                    c.source_of(best.id()),
                    Some(CandidateSource::Primary { object: obj.id })
                );
            }
        }
    }

    #[test]
    fn latents_are_unit_and_distinct() {
        let t = scene();
        let c = synthesize_candidates(&t, &CandidateNoiseSpec::default()).unwrap();
        for l in &c.latents {
            assert!((l.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(c.min_latent_distance.unwrap() > 0.0);
    }
}
