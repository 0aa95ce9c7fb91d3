//! Instance candidates and their JSON interchange form.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::{BinaryMask, Error, Result, FEATURE_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateId(pub u64);

impl fmt::Display for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    #[serde(rename = "ref")]
    Reference,
    #[serde(rename = "tgt")]
    Target,
}

/// Inclusive pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BBox {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl BBox {
    pub fn of_mask(mask: &BinaryMask) -> Option<BBox> {
        mask.bounding_box()
            .map(|(x_min, y_min, x_max, y_max)| BBox {
                x_min,
                y_min,
                x_max,
                y_max,
            })
    }
}

/// A 256-dimensional appearance feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_DIM {
            return Err(Error::FeatureLength(values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("non-finite feature component".into()));
        }
        Ok(Self(values))
    }

    pub fn zeros() -> Self {
        Self(vec![0.0; FEATURE_DIM])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn l2_distance(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// One detected object proposal in either frame.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceCandidate {
    id: CandidateId,
    frame: Frame,
    mask: BinaryMask,
    bbox: BBox,
    objectness: f64,
    mask_score: f64,
    feature: FeatureVector,
    area: usize,
}

impl InstanceCandidate {
    /// The bounding box is derived from the mask, which must be nonempty.
    pub fn new(
        id: CandidateId,
        frame: Frame,
        mask: BinaryMask,
        objectness: f64,
        mask_score: f64,
        feature: FeatureVector,
    ) -> Result<Self> {
        for (name, v) in [("objectness", objectness), ("mask_score", mask_score)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidValue(format!("{name} {v} outside [0, 1]")));
            }
        }
        let bbox = BBox::of_mask(&mask).ok_or(Error::EmptyMask)?;
        let area = mask.area();
        Ok(Self {
            id,
            frame,
            mask,
            bbox,
            objectness,
            mask_score,
            feature,
            area,
        })
    }

    pub fn id(&self) -> CandidateId {
        self.id
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn mask(&self) -> &BinaryMask {
        &self.mask
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn objectness(&self) -> f64 {
        self.objectness
    }

    pub fn mask_score(&self) -> f64 {
        self.mask_score
    }

    pub fn feature(&self) -> &FeatureVector {
        &self.feature
    }

    pub fn area(&self) -> usize {
        self.area
    }

    pub fn with_id(mut self, id: CandidateId) -> Self {
        self.id = id;
        self
    }
}

#[derive(Serialize, Deserialize)]
struct CandidateRecord {
    frame: Frame,
    id: u64,
    bbox: [usize; 4],
    objectness: f64,
    mask_score: f64,
    feature: Vec<f64>,
    mask_rle: Vec<u64>,
}

/// A set of candidates from one frame pair. Masks share the canvas size
/// stored at the document level.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateDocument {
    pub width: usize,
    pub height: usize,
    pub candidates: Vec<InstanceCandidate>,
}

#[derive(Serialize, Deserialize)]
struct DocumentRecord {
    width: usize,
    height: usize,
    candidates: Vec<CandidateRecord>,
}

impl CandidateDocument {
    pub fn reference(&self) -> Vec<InstanceCandidate> {
        self.of_frame(Frame::Reference)
    }

    pub fn target(&self) -> Vec<InstanceCandidate> {
        self.of_frame(Frame::Target)
    }

    fn of_frame(&self, frame: Frame) -> Vec<InstanceCandidate> {
        self.candidates
            .iter()
            .filter(|c| c.frame == frame)
            .cloned()
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut candidates = Vec::with_capacity(self.candidates.len());
        for c in &self.candidates {
            if c.mask.width() != self.width || c.mask.height() != self.height {
                return Err(Error::DimensionMismatch(format!(
                    "candidate {} mask is {}x{}, document is {}x{}",
                    c.id,
                    c.mask.width(),
                    c.mask.height(),
                    self.width,
                    self.height
                )));
            }
            candidates.push(CandidateRecord {
                frame: c.frame,
                id: c.id.0,
                bbox: [c.bbox.x_min, c.bbox.y_min, c.bbox.x_max, c.bbox.y_max],
                objectness: c.objectness,
                mask_score: c.mask_score,
                feature: c.feature.0.clone(),
                mask_rle: c.mask.to_rle(),
            });
        }
        let doc = DocumentRecord {
            width: self.width,
            height: self.height,
            candidates,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DocumentRecord = serde_json::from_str(text)?;
        let mut candidates = Vec::with_capacity(doc.candidates.len());
        for rec in doc.candidates {
            let mask = BinaryMask::from_rle(doc.width, doc.height, &rec.mask_rle)?;
            let cand = InstanceCandidate::new(
                CandidateId(rec.id),
                rec.frame,
                mask,
                rec.objectness,
                rec.mask_score,
                FeatureVector::new(rec.feature)?,
            )?;
            let b = cand.bbox;
            if [b.x_min, b.y_min, b.x_max, b.y_max] != rec.bbox {
                return Err(Error::InvalidValue(format!(
                    "candidate {} bbox {:?} is not the tight box of its mask",
                    rec.id, rec.bbox
                )));
            }
            candidates.push(cand);
        }
        Ok(Self {
            width: doc.width,
            height: doc.height,
            candidates,
        })
    }
}
