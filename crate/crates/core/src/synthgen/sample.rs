use std::path::Path;

use image::{ImageBuffer, Luma, RgbImage};
use serde::{Deserialize, Serialize};

use super::{
    generate_scene, synthesize_candidates, CandidateNoiseSpec, GroundTruthObject, IndexMap,
    SceneSpec, SceneTruth, SourcedCandidate, SyntheticCandidates,
};
use crate::flowfield::{read_flo_file, write_flo_file};
use crate::{CandidateDocument, CandidateId, Error, FlowField, Result};

pub const FRAME_REF: &str = "frame_ref.png";
pub const FRAME_TGT: &str = "frame_tgt.png";
pub const INDEX_REF: &str = "index_ref.png";
pub const INDEX_TGT: &str = "index_tgt.png";
pub const FLOW_FULL: &str = "flow_full.flo";
pub const FLOW_TRANSLATION: &str = "flow_translation.flo";
pub const CANDIDATES: &str = "candidates.json";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub frame_ref: RgbImage,
    pub frame_tgt: RgbImage,
    pub truth: SceneTruth,
    pub candidates: SyntheticCandidates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFiles {
    pub frame_ref: String,
    pub frame_tgt: String,
    pub index_ref: String,
    pub index_tgt: String,
    pub flow_full: String,
    pub flow_translation: String,
    pub candidates: String,
}

impl Default for SampleFiles {
    fn default() -> Self {
        Self {
            frame_ref: FRAME_REF.into(),
            frame_tgt: FRAME_TGT.into(),
            index_ref: INDEX_REF.into(),
            index_tgt: INDEX_TGT.into(),
            flow_full: FLOW_FULL.into(),
            flow_translation: FLOW_TRANSLATION.into(),
            candidates: CANDIDATES.into(),
        }
    }
}

impl SampleFiles {
    pub fn names(&self) -> [&str; 7] {
        [
            &self.frame_ref,
            &self.frame_tgt,
            &self.index_ref,
            &self.index_tgt,
            &self.flow_full,
            &self.flow_translation,
            &self.candidates,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: SampleFiles,
    pub width: usize,
    pub height: usize,
    pub background_translation: [f64; 2],
    pub objects: Vec<GroundTruthObject>,
    pub correspondences: Vec<(u16, u16)>,
    pub gt_matching: Vec<(CandidateId, CandidateId)>,
    pub candidate_sources: Vec<SourcedCandidate>,
    pub min_latent_distance: Option<f64>,
}

/// Seed of sample `index` derived from a data-set base seed.
pub fn sample_seed(base_seed: u64, index: u64) -> u64 {
    splitmix(splitmix(base_seed) ^ index)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn generate_sample(scene: &SceneSpec, noise: &CandidateNoiseSpec) -> Result<Sample> {
    let (frame_ref, frame_tgt, truth) = generate_scene(scene)?;
    let candidates = synthesize_candidates(&truth, noise)?;
    Ok(Sample {
        frame_ref,
        frame_tgt,
        truth,
        candidates,
    })
}

/// Sample `index` of the data set described by the two specs; their seeds
/// act as base seeds.
pub fn generate_indexed_sample(
    scene: &SceneSpec,
    noise: &CandidateNoiseSpec,
    index: u64,
) -> Result<Sample> {
    generate_sample(
        &SceneSpec {
            seed: sample_seed(scene.seed, index),
            ..scene.clone()
        },
        &CandidateNoiseSpec {
            seed: sample_seed(noise.seed, index),
            ..noise.clone()
        },
    )
}

fn save_png<P, C>(img: &ImageBuffer<P, C>, path: &Path) -> Result<()>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

fn index_image(map: &IndexMap) -> ImageBuffer<Luma<u16>, Vec<u16>> {
    ImageBuffer::from_raw(map.width() as u32, map.height() as u32, map.data().to_vec())
        .expect("index map buffer matches its dims")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes every artifact of `sample` into `dir` (created if missing).
pub fn write_sample(dir: impl AsRef<Path>, sample: &Sample) -> Result<Manifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = SampleFiles::default();
    let t = &sample.truth;
    save_png(&sample.frame_ref, &dir.join(&files.frame_ref))?;
    save_png(&sample.frame_tgt, &dir.join(&files.frame_tgt))?;
    save_png(&index_image(&t.index_map_ref), &dir.join(&files.index_ref))?;
    save_png(&index_image(&t.index_map_tgt), &dir.join(&files.index_tgt))?;
    write_flo_file(dir.join(&files.flow_full), &t.flow_full)?;
    write_flo_file(dir.join(&files.flow_translation), &t.flow_translation)?;
    write_text(
        &dir.join(&files.candidates),
        &sample.candidates.document().to_json()?,
    )?;
    let manifest = Manifest {
        files,
        width: t.width,
        height: t.height,
        background_translation: t.background_translation,
        objects: t.objects.clone(),
        correspondences: t.correspondences.clone(),
        gt_matching: sample.candidates.gt_matching.clone(),
        candidate_sources: sample.candidates.sources.clone(),
        min_latent_distance: sample.candidates.min_latent_distance,
    };
    write_text(
        &dir.join(MANIFEST),
        &serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

/// Everything [`write_sample`] emits, read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSample {
    pub manifest: Manifest,
    pub frame_ref: RgbImage,
    pub frame_tgt: RgbImage,
    pub index_ref: IndexMap,
    pub index_tgt: IndexMap,
    pub flow_full: FlowField,
    pub flow_translation: FlowField,
    pub candidates: CandidateDocument,
}

fn open_image(path: &Path) -> Result<image::DynamicImage> {
    image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn read_index(path: &Path) -> Result<IndexMap> {
    let img = open_image(path)?.into_luma16();
    IndexMap::from_vec(img.width() as usize, img.height() as usize, img.into_raw())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    Ok(serde_json::from_str(&read_text(
        &dir.as_ref().join(MANIFEST),
    )?)?)
}

pub fn read_sample(dir: impl AsRef<Path>) -> Result<LoadedSample> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let f = &manifest.files;
    Ok(LoadedSample {
        frame_ref: open_image(&dir.join(&f.frame_ref))?.into_rgb8(),
        frame_tgt: open_image(&dir.join(&f.frame_tgt))?.into_rgb8(),
        index_ref: read_index(&dir.join(&f.index_ref))?,
        index_tgt: read_index(&dir.join(&f.index_tgt))?,
        flow_full: read_flo_file(dir.join(&f.flow_full))?,
        flow_translation: read_flo_file(dir.join(&f.flow_translation))?,
        candidates: CandidateDocument::from_json(&read_text(&dir.join(&f.candidates))?)?,
        manifest,
    })
}
