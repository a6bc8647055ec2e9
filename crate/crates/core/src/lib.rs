//! Concept subspaces, debiasing transforms, bias metrics and step-by-step
//! 2-D views for word embeddings.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which every front end uses.

pub mod comparison;
pub mod embedding;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod presets;
pub mod scalar;
pub mod subspace;
pub mod transforms;
pub mod view;

pub use embedding::{EmbeddingSnapshot, Neighbor, PairedWordSet, Precision, SnapshotId, TextFormat, WordSet};
pub use error::{Error, Result};
pub use metrics::{MetricReport, MetricSets, Score, WeatSets};
pub use scalar::Scalar;
pub use subspace::{ConceptDirection, SubspaceMethod};
pub use transforms::{run_job, DebiasJob, JobSeeds, Method};

pub type Snapshot = EmbeddingSnapshot<f64>;
pub type Direction = ConceptDirection<f64>;
pub type Report = MetricReport<f64>;
pub use view::{build_trace, StepTrace, ViewFrame};

pub type Trace = StepTrace<f64>;
