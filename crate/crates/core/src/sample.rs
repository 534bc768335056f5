//! Random points for property suites and randomized oracle instances.
//!
//! Every generator draws from a caller-supplied RNG so that suites stay
//! reproducible under a fixed seed.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;

use crate::space::{Backend, SpaceHandle, SpacePoint};
use crate::spaces::{EuclideanPoint, SpdPoint, SpiderPoint};
use crate::treespace::{BhvPoint, Split};

/// Coordinates uniform in `[-scale, scale]`.
pub fn euclidean<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> EuclideanPoint {
    let coords = (0..dim).map(|_| rng.random_range(-scale..=scale)).collect();
    EuclideanPoint::new(coords).expect("finite coordinates")
}

/// Uniform ray and radius in `[0, scale]`; one draw in ten is the origin, so
/// paths through the branch point are well covered.
pub fn spider<R: Rng + ?Sized>(rng: &mut R, rays: usize, scale: f64) -> SpiderPoint {
    if rng.random_range(0..10) == 0 {
        return SpiderPoint::origin();
    }
    SpiderPoint::new(rng.random_range(0..rays), rng.random_range(0.0..=scale)).expect("valid spider point")
}

/// `exp(S)` for a random symmetric `S` with entries uniform in `[-1, 1]`.
pub fn spd<R: Rng + ?Sized>(rng: &mut R, order: usize) -> SpdPoint {
    let mut s = DMatrix::<f64>::zeros(order, order);
    for i in 0..order {
        for j in i..order {
            let v = rng.random_range(-1.0..=1.0);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let eig = s.symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (j, l) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(l.exp());
    }
    SpdPoint::new(scaled * eig.eigenvectors.transpose(), 0.0).expect("exp of a symmetric matrix is SPD")
}

/// A random rooted tree: a uniformly random binary topology built by
/// successive joins, with interior lengths uniform in `(0, scale]`. Each
/// interior edge is contracted with probability `collapse`, which puts a
/// share of the samples on orthant boundaries. Pendant lengths are uniform in
/// `[0, scale]`.
pub fn bhv<R: Rng + ?Sized>(rng: &mut R, leaves: usize, scale: f64, collapse: f64) -> BhvPoint {
    let mut clades: Vec<u64> = (0..leaves).map(|i| 1u64 << i).collect();
    let mut splits = BTreeMap::new();
    while clades.len() > 1 {
        let i = rng.random_range(0..clades.len());
        let a = clades.swap_remove(i);
        let j = rng.random_range(0..clades.len());
        let b = clades.swap_remove(j);
        let joined = a | b;
        if clades.is_empty() {
            break; // the root clade holds every taxon and is not a split
        }
        clades.push(joined);
        if rng.random::<f64>() >= collapse {
            let split = Split::from_clade(joined, leaves).expect("proper clade");
            splits.insert(split, scale * (1.0 - rng.random::<f64>()));
        }
    }
    let pendants = (0..leaves).map(|_| rng.random_range(0.0..=scale)).collect();
    BhvPoint::new(leaves, splits, pendants, 0.0).expect("clades of one tree are compatible")
}

/// A random point of `space` at roughly the given scale.
pub fn point<R: Rng + ?Sized>(rng: &mut R, space: &SpaceHandle, scale: f64) -> SpacePoint {
    match space.backend() {
        Backend::Euclidean { dim } => euclidean(rng, dim, scale).into(),
        Backend::Spider { rays } => spider(rng, rays, scale).into(),
        Backend::Spd { order } => spd(rng, order).into(),
        Backend::Bhv { leaves } => bhv(rng, leaves, scale, 0.25).into(),
    }
}
