//! Training losses for the candidate feature and mask-score heads.
//!
//! These are evaluated on plain vectors and masks; no network is involved.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{BinaryMask, Error, Result, FEATURE_DIM};

/// Margin used by the feature triplet loss.
pub const DEFAULT_MARGIN: f64 = 2.0;

/// Upper bound on the matching and non-matching sets per anchor.
pub const MAX_FEATURE_SET: usize = 9;

fn check_len(v: &[f64]) -> Result<()> {
    if v.len() != FEATURE_DIM {
        return Err(Error::FeatureLength(v.len()));
    }
    Ok(())
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn mean_l1(anchor: &[f64], set: &[&[f64]], what: &'static str) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyInput(what));
    }
    let mut total = 0.0;
    for f in set {
        check_len(f)?;
        total += l1(anchor, f);
    }
    Ok(total / set.len() as f64)
}

/// Mean L1 distance from `anchor` to the matching set and to the
/// non-matching set, returned as `(similarity, dissimilarity)`.
///
/// The L1 norm is summed over all components. Set sizes are not capped
/// here; see [`sample_capped`].
pub fn feature_similarity_losses(
    anchor: &[f64],
    matching: &[&[f64]],
    nonmatching: &[&[f64]],
) -> Result<(f64, f64)> {
    check_len(anchor)?;
    let sim = mean_l1(anchor, matching, "matching feature set")?;
    let dis = mean_l1(anchor, nonmatching, "non-matching feature set")?;
    Ok((sim, dis))
}

/// Mean over objects of `max(sim - dis + margin, 0)`.
pub fn feature_triplet_loss(per_object: &[(f64, f64)], margin: f64) -> Result<f64> {
    if per_object.is_empty() {
        return Err(Error::EmptyInput("per-object losses"));
    }
    if margin.is_nan() || margin < 0.0 {
        return Err(Error::InvalidValue(format!("margin {margin} must be >= 0")));
    }
    let total: f64 = per_object
        .iter()
        .map(|&(sim, dis)| (sim - dis + margin).max(0.0))
        .sum();
    Ok(total / per_object.len() as f64)
}

/// Mean absolute difference between each candidate's mask IoU with its
/// ground-truth mask and the candidate's predicted mask score.
pub fn mask_confirmation_loss(candidates: &[(&BinaryMask, &BinaryMask, f64)]) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("mask confirmation candidates"));
    }
    let mut total = 0.0;
    for (est, gt, score) in candidates {
        total += (est.iou(gt)? - score).abs();
    }
    Ok(total / candidates.len() as f64)
}

/// Uniformly samples at most `cap` items without replacement. Order of the
/// returned items follows the input order.
pub fn sample_capped<T>(items: &[T], cap: usize, seed: u64) -> Vec<&T> {
    if items.len() <= cap {
        return items.iter().collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, items.len(), cap).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| &items[i]).collect()
}

/// Full feature loss over objects, each given as the features of all its
/// candidates. For every object a random anchor is drawn, the matching set
/// is the object's other candidates and the non-matching set is drawn from
/// all other objects, both capped at [`MAX_FEATURE_SET`].
pub fn feature_loss_for_objects(objects: &[Vec<Vec<f64>>], margin: f64, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_object = Vec::with_capacity(objects.len());
    for (oi, cands) in objects.iter().enumerate() {
        if cands.len() < 2 {
            return Err(Error::EmptyInput("object needs at least two candidates"));
        }
        let anchor_idx = rand::Rng::random_range(&mut rng, 0..cands.len());
        let others: Vec<&[f64]> = cands
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != anchor_idx)
            .map(|(_, f)| f.as_slice())
            .collect();
        let foreign: Vec<&[f64]> = objects
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != oi)
            .flat_map(|(_, c)| c.iter().map(Vec::as_slice))
            .collect();
        let m_seed = rand::Rng::random::<u64>(&mut rng);
        let n_seed = rand::Rng::random::<u64>(&mut rng);
        let matching: Vec<&[f64]> = sample_capped(&others, MAX_FEATURE_SET, m_seed)
            .into_iter()
            .copied()
            .collect();
        let nonmatching: Vec<&[f64]> = sample_capped(&foreign, MAX_FEATURE_SET, n_seed)
            .into_iter()
            .copied()
            .collect();
        per_object.push(feature_similarity_losses(
            &cands[anchor_idx],
            &matching,
            &nonmatching,
        )?);
    }
    feature_triplet_loss(&per_object, margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn splat(v: f64) -> Vec<f64> {
        vec![v; FEATURE_DIM]
    }

    fn onehot(scale: f64) -> Vec<f64> {
        let mut v = splat(0.0);
        v[0] = scale;
        v
    }

    #[test]
    fn similarity_examples() {
        let zero = splat(0.0);
        let small = splat(0.01);
        let (s, d) = feature_similarity_losses(&zero, &[&zero], &[&small]).unwrap();
        assert_eq!(s, 0.0);
        assert!((d - 2.56).abs() < 1e-12);

        let v: Vec<f64> = (0..FEATURE_DIM).map(|i| i as f64 * 0.1).collect();
        assert_eq!(
            feature_similarity_losses(&v, &[&v, &v], &[&v]).unwrap(),
            (0.0, 0.0)
        );

        let (e1, e2) = (onehot(1.0), onehot(2.0));
        assert_eq!(
            feature_similarity_losses(&zero, &[&e1], &[&e2]).unwrap(),
            (1.0, 2.0)
        );
    }

    #[test]
    fn similarity_errors() {
        let zero = splat(0.0);
        assert!(matches!(
            feature_similarity_losses(&zero, &[], &[&zero]),
            Err(Error::EmptyInput(_))
        ));
        let short = vec![0.0; 3];
        assert!(matches!(
            feature_similarity_losses(&zero, &[&short], &[&zero]),
            Err(Error::FeatureLength(3))
        ));
    }

    #[test]
    fn triplet_examples() {
        assert_eq!(feature_triplet_loss(&[(0.0, 2.56)], 2.0).unwrap(), 0.0);
        assert_eq!(feature_triplet_loss(&[(0.0, 1.0)], 2.0).unwrap(), 1.0);
        assert_eq!(feature_triplet_loss(&[(3.7, 3.7)], 0.0).unwrap(), 0.0);
        assert!(feature_triplet_loss(&[], 2.0).is_err());
    }

    #[test]
    fn mask_confirmation_examples() {
        let a = BinaryMask::from_pixels(4, 4, [(0, 0), (1, 0), (2, 0), (3, 0)]).unwrap();
        assert_eq!(mask_confirmation_loss(&[(&a, &a, 1.0)]).unwrap(), 0.0);

        // overlap 3 of two 4-pixel masks, union 5
        let b = BinaryMask::from_pixels(4, 4, [(1, 0), (2, 0), (3, 0), (3, 1)]).unwrap();
        assert!((a.iou(&b).unwrap() - 0.6).abs() < 1e-15);
        let loss = mask_confirmation_loss(&[(&a, &b, 0.9)]).unwrap();
        assert!((loss - 0.3).abs() < 1e-12);

        // |1.0 - 0.9| and |0.6 - 0.9|
        let loss = mask_confirmation_loss(&[(&a, &a, 0.9), (&a, &b, 0.9)]).unwrap();
        assert!((loss - 0.2).abs() < 1e-12);
        assert!(mask_confirmation_loss(&[]).is_err());
    }

    #[test]
    fn capped_sampling() {
        let items: Vec<u32> = (0..20).collect();
        let picked = sample_capped(&items, MAX_FEATURE_SET, 3);
        assert_eq!(picked.len(), 9);
        assert!(picked.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(picked, sample_capped(&items, MAX_FEATURE_SET, 3));
        assert_eq!(sample_capped(&items[..4], 9, 3).len(), 4);
    }

    #[test]
    fn object_loss_zero_for_separated_objects() {
        let objects = vec![
            vec![splat(0.0), splat(0.001)],
            vec![splat(1.0), splat(1.001)],
        ];
        assert_eq!(
            feature_loss_for_objects(&objects, DEFAULT_MARGIN, 1).unwrap(),
            0.0
        );
        let single = vec![vec![splat(0.0)], vec![splat(1.0)]];
        assert!(feature_loss_for_objects(&single, DEFAULT_MARGIN, 1).is_err());
    }
}
