use std::collections::HashMap;

use crate::matching::MatchSet;
use crate::{CandidateId, Error, FlowField, InstanceCandidate, Result};

/// Builds the piecewise-constant translation field for a set of matches.
///
/// The field starts at zero. For each pair, the vector from the reference
/// mask centroid to the target mask centroid is written into every pixel of
/// the reference mask; later pairs overwrite earlier ones where masks
/// overlap.
pub fn rasterize_translation_field(
    matches: &MatchSet,
    reference: &[InstanceCandidate],
    target: &[InstanceCandidate],
    width: usize,
    height: usize,
) -> Result<FlowField> {
    let (refs, tgts) = (by_id(reference), by_id(target));
    let mut field = FlowField::zeros(width, height)?;
    for pair in &matches.pairs {
        let r = refs
            .get(&pair.ref_id)
            .ok_or(Error::UnknownCandidate(pair.ref_id.0))?;
        let t = tgts
            .get(&pair.tgt_id)
            .ok_or(Error::UnknownCandidate(pair.tgt_id.0))?;
        for c in [r, t] {
            if c.mask().width() != width || c.mask().height() != height {
                return Err(Error::DimensionMismatch(format!(
                    "candidate {} mask is {}x{}, field is {width}x{height}",
                    c.id(),
                    c.mask().width(),
                    c.mask().height()
                )));
            }
        }
        let (rx, ry) = r.mask().centroid()?;
        let (tx, ty) = t.mask().centroid()?;
        let uv = [tx - rx, ty - ry];
        for (x, y) in r.mask().pixels() {
            field.set(x, y, uv);
        }
    }
    Ok(field)
}

fn by_id(cands: &[InstanceCandidate]) -> HashMap<CandidateId, &InstanceCandidate> {
    cands.iter().map(|c| (c.id(), c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::MatchPair;
    use crate::{BinaryMask, FeatureVector, Frame};

    fn cand(id: u64, frame: Frame, px: &[(usize, usize)]) -> InstanceCandidate {
        InstanceCandidate::new(
            CandidateId(id),
            frame,
            BinaryMask::from_pixels(80, 40, px.iter().copied()).unwrap(),
            1.0,
            1.0,
            FeatureVector::zeros(),
        )
        .unwrap()
    }

    fn pair(r: u64, t: u64) -> MatchPair {
        MatchPair {
            ref_id: CandidateId(r),
            tgt_id: CandidateId(t),
            distance: 0.0,
        }
    }

    #[test]
    fn empty_matches_give_zero_field() {
        let f = rasterize_translation_field(&MatchSet::default(), &[], &[], 8, 4).unwrap();
        assert_eq!(f, FlowField::zeros(8, 4).unwrap());
    }

    #[test]
    fn centroid_difference_fills_reference_mask() {
        // centroid (10,10) -> (60,30)
        let r = cand(1, Frame::Reference, &[(9, 10), (11, 10), (10, 9), (10, 11)]);
        let t = cand(2, Frame::Target, &[(59, 30), (61, 30)]);
        let m = MatchSet {
            pairs: vec![pair(1, 2)],
            ..Default::default()
        };
        let f = rasterize_translation_field(&m, std::slice::from_ref(&r), &[t], 80, 40).unwrap();
        for y in 0..40 {
            for x in 0..80 {
                let expect = if r.mask().get(x, y) {
                    [50.0, 20.0]
                } else {
                    [0.0, 0.0]
                };
                assert_eq!(f.get(x, y), expect);
            }
        }
    }

    #[test]
    fn later_pairs_overwrite() {
        let r1 = cand(1, Frame::Reference, &[(0, 0), (1, 0)]);
        let r2 = cand(2, Frame::Reference, &[(1, 0)]);
        let t1 = cand(3, Frame::Target, &[(2, 0), (3, 0)]);
        let t2 = cand(4, Frame::Target, &[(1, 5)]);
        let m = MatchSet {
            pairs: vec![pair(1, 3), pair(2, 4)],
            ..Default::default()
        };
        let f = rasterize_translation_field(&m, &[r1, r2], &[t1, t2], 80, 40).unwrap();
        assert_eq!(f.get(0, 0), [2.0, 0.0]);
        assert_eq!(f.get(1, 0), [0.0, 5.0]);
    }

    #[test]
    fn unknown_id_is_an_error() {
        let m = MatchSet {
            pairs: vec![pair(1, 2)],
            ..Default::default()
        };
        let r = cand(1, Frame::Reference, &[(0, 0)]);
        assert!(matches!(
            rasterize_translation_field(&m, &[r], &[], 80, 40),
            Err(Error::UnknownCandidate(2))
        ));
    }
}
