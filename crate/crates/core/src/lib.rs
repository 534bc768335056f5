//! Means, medians and convex minimization in Hadamard spaces.
//!
//! The crate is organized around a single geodesic-space contract
//! ([`space::SpaceHandle`]) implemented by four backends: Euclidean space,
//! the k-spider (an open book of rays glued at the origin), the manifold of
//! symmetric positive definite matrices with the affine-invariant metric,
//! and a desk-scale BHV phylogenetic tree space. On top of it sit the
//! splitting proximal point drivers ([`prox`]), the law-of-large-numbers
//! mean estimator, and independent reference solvers ([`oracles`]) used to
//! check every result.

pub mod cli;
pub mod error;
pub mod format;
pub mod oracles;
pub mod prox;
pub mod sample;
pub mod space;
pub mod spaces;
pub mod treespace;

pub use error::{Error, Result};
pub use prox::{
    AnchorConfiguration, ConvexSet, IterationTrace, MeanVariant, MedianVariant, ObjectiveComponent, RunConfig, StepSchedule, StopReason,
};
pub use space::{Backend, GeodesicBall, SpaceHandle, SpacePoint};
pub use spaces::{EuclideanPoint, SpdPoint, SpiderPoint};
pub use treespace::{BhvPoint, Split, TaxonSet};
