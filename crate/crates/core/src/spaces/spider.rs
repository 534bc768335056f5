//! The k-spider: k copies of the half-line glued at a common origin.
//!
//! It is an ℝ-tree, so the geodesic between points on different rays runs
//! down the first ray to the origin and up the second.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiderPoint {
    ray: usize,
    radius: f64,
}

impl SpiderPoint {
    /// Builds a point; the origin is always stored on ray 0.
    pub fn new(ray: usize, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return invalid(format!("spider radius must be finite and nonnegative, got {radius}"));
        }
        Ok(Self::canonical(ray, radius, 0.0))
    }

    pub fn origin() -> Self {
        SpiderPoint { ray: 0, radius: 0.0 }
    }

    pub(crate) fn canonical(ray: usize, radius: f64, tolerance: f64) -> Self {
        if radius <= tolerance {
            SpiderPoint { ray: 0, radius: 0.0 }
        } else {
            SpiderPoint { ray, radius }
        }
    }

    pub fn ray(&self) -> usize {
        self.ray
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_origin(&self) -> bool {
        self.radius == 0.0
    }
}

pub fn distance(p: &SpiderPoint, q: &SpiderPoint) -> f64 {
    if p.ray == q.ray {
        (p.radius - q.radius).abs()
    } else {
        p.radius + q.radius
    }
}

pub fn geodesic(p: &SpiderPoint, q: &SpiderPoint, t: f64, tolerance: f64) -> SpiderPoint {
    if p.ray == q.ray {
        return SpiderPoint::canonical(p.ray, p.radius + t * (q.radius - p.radius), tolerance);
    }
    // arc length travelled from p; the origin is crossed at t* = r_p / (r_p + r_q)
    let s = t * (p.radius + q.radius);
    if s <= p.radius {
        SpiderPoint::canonical(p.ray, p.radius - s, tolerance)
    } else {
        SpiderPoint::canonical(q.ray, s - p.radius, tolerance)
    }
}
