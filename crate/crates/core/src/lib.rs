//! Object-aware motion estimation machinery.
//!
//! Instance candidates detected in a reference and a target frame are
//! clustered by feature, pruned, split spatially and greedily matched across
//! frames ([`matching`]). Matched mask centroids produce a piecewise-constant
//! translation motion field ([`flowfield`]) that can be injected into the
//! coarse levels of a flow pyramid. [`eval`] scores dense flow against ground
//! truth and [`synthgen`] produces synthetic scenes with exact ground truth.

pub mod candidate;
pub mod error;
pub mod eval;
pub mod field;
pub mod flowfield;
pub mod losses;
pub mod mask;
pub mod matching;
pub mod synthgen;

pub use candidate::{
    BBox, CandidateDocument, CandidateId, FeatureVector, Frame, InstanceCandidate,
};
pub use error::{Error, Result};
pub use field::{FlowField, FlowStats};
pub use mask::BinaryMask;

/// Length of every candidate feature vector.
pub const FEATURE_DIM: usize = 256;
