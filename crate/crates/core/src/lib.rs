//! Planar curve completion from the statistics of natural curve fragments.
//!
//! A corpus of curves is cut into every contiguous fragment, each fragment is
//! described by the pose of its end relative to its start, and the fragments
//! are indexed by that pose. A gap between two oriented endpoints is filled
//! with the pointwise mean of the fragments whose relative pose matches.

pub mod baseline;
pub mod bench;
pub mod corpus;
pub mod error;
pub mod geometry;
pub mod index;
pub mod reconstruct;

pub use baseline::{euler_spiral_complete, eval_clothoid, fit_clothoid, ClothoidSegment};
pub use corpus::{CorpusConfig, CurveFormat, CurveRecord, FragmentRef, SynthFamily};
pub use error::{Error, Result};
pub use geometry::{discrete_frechet, resample_arclength, Inducer, Point2, Polyline, Similarity2};
pub use index::{
    canonicalize, BucketParams, FragmentIndex, Match, Prior, QueryTolerances, RelativeConfiguration,
};
pub use reconstruct::{
    reconstruct, scale_invariance_analysis, CurveFlags, MeanCurve, ReconstructOptions, Reconstruction,
    ScaleInvarianceReport,
};
