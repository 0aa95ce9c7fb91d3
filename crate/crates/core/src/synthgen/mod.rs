//! Synthetic scenes of rigid sprites over a moving background, with exact
//! ground truth: index maps, full and translation flow, and noisy instance
//! candidates whose correct matching is known.

mod candidates;
mod sample;
mod scene;

pub use candidates::{
    synthesize_candidates, CandidateNoiseSpec, CandidateSource, SourcedCandidate,
    SyntheticCandidates,
};
pub use sample::{
    generate_indexed_sample, generate_sample, read_manifest, read_sample, sample_seed,
    write_sample, LoadedSample, Manifest, Sample, SampleFiles, MANIFEST,
};
pub use scene::{
    generate_scene, render_scene, GroundTruthObject, IndexMap, SceneSpec, SceneTruth,
    SpritePlacement,
};
