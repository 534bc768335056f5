//! Concrete backends: Euclidean space, the k-spider and the SPD-matrix manifold.

pub mod euclidean;
pub mod spd;
pub mod spider;

pub use euclidean::EuclideanPoint;
pub use spd::SpdPoint;
pub use spider::SpiderPoint;
