//! The Hadamard-space contract shared by every backend.
//!
//! A [`SpaceHandle`] names a backend and its numeric tolerance; every
//! operation takes the handle plus [`SpacePoint`] values and rejects points
//! that belong to a different backend. Geodesics are only ever evaluated at a
//! single parameter; no path objects exist.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::spaces::{euclidean, spd, spider, EuclideanPoint, SpdPoint, SpiderPoint};
use crate::treespace::{self, BhvPoint};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const MAX_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Euclidean { dim: usize },
    Spider { rays: usize },
    Spd { order: usize },
    Bhv { leaves: usize },
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Euclidean { dim } => write!(f, "euclidean:{dim}"),
            Backend::Spider { rays } => write!(f, "spider:{rays}"),
            Backend::Spd { order } => write!(f, "spd:{order}"),
            Backend::Bhv { leaves } => write!(f, "bhv:{leaves}"),
        }
    }
}

/// A backend together with the tolerance used for degeneracy decisions
/// (point equality, origin canonicalization, eigenvalue clamping).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceHandle {
    backend: Backend,
    tolerance: f64,
}

impl SpaceHandle {
    pub fn new(backend: Backend) -> Result<Self> {
        match backend {
            Backend::Euclidean { dim } if dim < 1 => invalid("euclidean dimension must be at least 1"),
            Backend::Spider { rays } if rays < 3 => invalid("a spider needs at least 3 rays"),
            Backend::Spd { order } if order < 1 => invalid("matrix order must be at least 1"),
            Backend::Bhv { leaves } if leaves < 3 => invalid("tree space needs at least 3 leaves"),
            Backend::Bhv { leaves } if leaves > treespace::MAX_TAXA => {
                invalid(format!("tree space supports at most {} leaves", treespace::MAX_TAXA))
            }
            _ => Ok(SpaceHandle { backend, tolerance: DEFAULT_TOLERANCE }),
        }
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(Backend::Euclidean { dim })
    }

    pub fn spider(rays: usize) -> Result<Self> {
        Self::new(Backend::Spider { rays })
    }

    pub fn spd(order: usize) -> Result<Self> {
        Self::new(Backend::Spd { order })
    }

    pub fn bhv(leaves: usize) -> Result<Self> {
        Self::new(Backend::Bhv { leaves })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(0.0..=MAX_TOLERANCE).contains(&tolerance) {
            return invalid(format!("tolerance must lie in [0, {MAX_TOLERANCE}], got {tolerance}"));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Checks that `p` carries the payload this space expects.
    pub fn check(&self, p: &SpacePoint) -> Result<()> {
        let ok = match (self.backend, p) {
            (Backend::Euclidean { dim }, SpacePoint::Euclidean(x)) => x.dim() == dim,
            (Backend::Spider { rays }, SpacePoint::Spider(x)) => x.ray() < rays,
            (Backend::Spd { order }, SpacePoint::Spd(x)) => x.order() == order,
            (Backend::Bhv { leaves }, SpacePoint::Bhv(x)) => x.leaf_count() == leaves,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::BackendMismatch(format!("{} point used in {} space", p.describe(), self.backend)))
        }
    }

    pub fn distance(&self, p: &SpacePoint, q: &SpacePoint) -> Result<f64> {
        self.check(p)?;
        self.check(q)?;
        Ok(match (p, q) {
            (SpacePoint::Euclidean(a), SpacePoint::Euclidean(b)) => euclidean::distance(a, b),
            (SpacePoint::Spider(a), SpacePoint::Spider(b)) => spider::distance(a, b),
            (SpacePoint::Spd(a), SpacePoint::Spd(b)) => spd::distance(a, b, self.tolerance),
            (SpacePoint::Bhv(a), SpacePoint::Bhv(b)) => treespace::bhv_distance(a, b)?,
            _ => unreachable!("checked above"),
        })
    }

    /// The point `(1-t)p ⊕ tq` on the geodesic from `p` to `q`.
    pub fn geodesic_point(&self, p: &SpacePoint, q: &SpacePoint, t: f64) -> Result<SpacePoint> {
        self.check(p)?;
        self.check(q)?;
        if !(0.0..=1.0).contains(&t) {
            return invalid(format!("geodesic parameter must lie in [0, 1], got {t}"));
        }
        if t == 0.0 {
            return Ok(p.clone());
        }
        if t == 1.0 {
            return Ok(q.clone());
        }
        Ok(match (p, q) {
            (SpacePoint::Euclidean(a), SpacePoint::Euclidean(b)) => SpacePoint::Euclidean(euclidean::geodesic(a, b, t)),
            (SpacePoint::Spider(a), SpacePoint::Spider(b)) => SpacePoint::Spider(spider::geodesic(a, b, t, self.tolerance)),
            (SpacePoint::Spd(a), SpacePoint::Spd(b)) => SpacePoint::Spd(spd::geodesic(a, b, t, self.tolerance)),
            (SpacePoint::Bhv(a), SpacePoint::Bhv(b)) => SpacePoint::Bhv(treespace::bhv_geodesic(a, b, t)?),
            _ => unreachable!("checked above"),
        })
    }

    /// Points are equal when their distance is within the space tolerance.
    pub fn points_equal(&self, p: &SpacePoint, q: &SpacePoint) -> Result<bool> {
        Ok(self.distance(p, q)? <= self.tolerance)
    }

    /// `d(z,γ(t))² − [(1−t)d(z,p)² + t d(z,q)² − t(1−t)d(p,q)²]`, nonpositive in a CAT(0) space.
    pub fn cat0_gap(&self, z: &SpacePoint, p: &SpacePoint, q: &SpacePoint, t: f64) -> Result<f64> {
        let g = self.geodesic_point(p, q, t)?;
        let lhs = self.distance(z, &g)?.powi(2);
        let dzp = self.distance(z, p)?;
        let dzq = self.distance(z, q)?;
        let dpq = self.distance(p, q)?;
        Ok(lhs - ((1.0 - t) * dzp * dzp + t * dzq * dzq - t * (1.0 - t) * dpq * dpq))
    }

    /// `d(x,y)² + d(u,v)² − d(x,v)² − d(y,u)² − 2 d(x,u) d(y,v)`, nonpositive in a Hadamard space.
    pub fn reshetnyak_gap(&self, x: &SpacePoint, y: &SpacePoint, u: &SpacePoint, v: &SpacePoint) -> Result<f64> {
        let xy = self.distance(x, y)?;
        let uv = self.distance(u, v)?;
        let xv = self.distance(x, v)?;
        let yu = self.distance(y, u)?;
        let xu = self.distance(x, u)?;
        let yv = self.distance(y, v)?;
        Ok(xy * xy + uv * uv - xv * xv - yu * yu - 2.0 * xu * yv)
    }

    /// Metric projection onto a closed geodesic ball.
    pub fn project_ball(&self, ball: &GeodesicBall, x: &SpacePoint) -> Result<SpacePoint> {
        let d = self.distance(&ball.center, x)?;
        if d <= ball.radius {
            return Ok(x.clone());
        }
        self.geodesic_point(&ball.center, x, ball.radius / d)
    }
}

/// A point of one of the shipped backends.
#[derive(Debug, Clone, PartialEq)]
pub enum SpacePoint {
    Euclidean(EuclideanPoint),
    Spider(SpiderPoint),
    Spd(SpdPoint),
    Bhv(BhvPoint),
}

impl SpacePoint {
    fn describe(&self) -> String {
        match self {
            SpacePoint::Euclidean(x) => format!("euclidean:{}", x.dim()),
            SpacePoint::Spider(x) => format!("spider(ray {})", x.ray()),
            SpacePoint::Spd(x) => format!("spd:{}", x.order()),
            SpacePoint::Bhv(x) => format!("bhv:{}", x.leaf_count()),
        }
    }

    pub fn as_euclidean(&self) -> Option<&EuclideanPoint> {
        match self {
            SpacePoint::Euclidean(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_spider(&self) -> Option<&SpiderPoint> {
        match self {
            SpacePoint::Spider(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_spd(&self) -> Option<&SpdPoint> {
        match self {
            SpacePoint::Spd(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_bhv(&self) -> Option<&BhvPoint> {
        match self {
            SpacePoint::Bhv(x) => Some(x),
            _ => None,
        }
    }
}

impl From<EuclideanPoint> for SpacePoint {
    fn from(p: EuclideanPoint) -> Self {
        SpacePoint::Euclidean(p)
    }
}

impl From<SpiderPoint> for SpacePoint {
    fn from(p: SpiderPoint) -> Self {
        SpacePoint::Spider(p)
    }
}

impl From<SpdPoint> for SpacePoint {
    fn from(p: SpdPoint) -> Self {
        SpacePoint::Spd(p)
    }
}

impl From<BhvPoint> for SpacePoint {
    fn from(p: BhvPoint) -> Self {
        SpacePoint::Bhv(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicBall {
    pub center: SpacePoint,
    pub radius: f64,
}

impl GeodesicBall {
    pub fn new(center: SpacePoint, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return invalid(format!("ball radius must be finite and nonnegative, got {radius}"));
        }
        Ok(GeodesicBall { center, radius })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(v: &[f64]) -> SpacePoint {
        EuclideanPoint::new(v.to_vec()).unwrap().into()
    }

    fn s(ray: usize, r: f64) -> SpacePoint {
        SpiderPoint::new(ray, r).unwrap().into()
    }

    #[test]
    fn handle_invariants() {
        assert!(SpaceHandle::euclidean(0).is_err());
        assert!(SpaceHandle::spider(2).is_err());
        assert!(SpaceHandle::spd(0).is_err());
        assert!(SpaceHandle::bhv(2).is_err());
        let h = SpaceHandle::euclidean(2).unwrap();
        assert_eq!(h.tolerance(), 1e-12);
        assert!(h.with_tolerance(1e-5).is_err());
        assert!(h.with_tolerance(-1.0).is_err());
        assert_eq!(h.with_tolerance(0.0).unwrap().tolerance(), 0.0);
    }

    #[test]
    fn distance_examples() {
        let h = SpaceHandle::euclidean(2).unwrap();
        assert_eq!(h.distance(&e(&[0.0, 0.0]), &e(&[3.0, 4.0])).unwrap(), 5.0);
        let sp = SpaceHandle::spider(3).unwrap();
        assert_eq!(sp.distance(&s(0, 1.0), &s(1, 2.0)).unwrap(), 3.0);
        assert_eq!(sp.distance(&s(2, 1.0), &s(2, 4.0)).unwrap(), 3.0);
    }

    #[test]
    fn spider_distance_matches_path_enumeration() {
        // Candidate paths between different rays: through the origin, or
        // staying on a ray, which only exists for shared rays.
        let sp = SpaceHandle::spider(3).unwrap();
        let candidates = |a: (usize, f64), b: (usize, f64)| -> f64 {
            let mut best = a.1 + b.1;
            if a.0 == b.0 {
                best = best.min((a.1 - b.1).abs());
            }
            best
        };
        for (a, b) in [((0, 1.0), (1, 2.0)), ((0, 1.0), (2, 5.0)), ((1, 2.0), (1, 5.0))] {
            assert_eq!(sp.distance(&s(a.0, a.1), &s(b.0, b.1)).unwrap(), candidates(a, b));
        }
    }

    #[test]
    fn mixing_backends_is_an_error() {
        let h = SpaceHandle::euclidean(2).unwrap();
        assert!(matches!(h.distance(&e(&[0.0, 0.0]), &s(0, 1.0)), Err(Error::BackendMismatch(_))));
        assert!(matches!(h.distance(&e(&[0.0, 0.0]), &e(&[0.0])), Err(Error::BackendMismatch(_))));
        let sp = SpaceHandle::spider(3).unwrap();
        assert!(sp.distance(&s(3, 1.0), &s(0, 1.0)).is_err());
    }

    #[test]
    fn geodesic_examples() {
        let h = SpaceHandle::euclidean(2).unwrap();
        assert_eq!(h.geodesic_point(&e(&[0.0, 0.0]), &e(&[2.0, 0.0]), 0.25).unwrap(), e(&[0.5, 0.0]));
        let sp = SpaceHandle::spider(3).unwrap();
        let mid = sp.geodesic_point(&s(0, 1.0), &s(1, 3.0), 0.5).unwrap();
        assert_eq!(mid, s(1, 1.0));
        // constant speed postcondition
        assert!((sp.distance(&s(0, 1.0), &mid).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(sp.geodesic_point(&s(0, 1.0), &s(1, 3.0), 1.0).unwrap(), s(1, 3.0));
        assert!(h.geodesic_point(&e(&[0.0, 0.0]), &e(&[2.0, 0.0]), 1.5).is_err());
        assert!(h.geodesic_point(&e(&[0.0, 0.0]), &e(&[2.0, 0.0]), -0.1).is_err());
    }

    #[test]
    fn cat0_gap_examples() {
        let h = SpaceHandle::euclidean(2).unwrap();
        let g = h.cat0_gap(&e(&[1.0, 2.0]), &e(&[0.0, 0.0]), &e(&[4.0, -1.0]), 0.5).unwrap();
        assert!(g.abs() < 1e-12);
        let sp = SpaceHandle::spider(3).unwrap();
        // γ(0.5) is the origin: lhs = 1, rhs = 0.5·4 + 0.5·4 − 0.25·4 = 3
        let g = sp.cat0_gap(&s(2, 1.0), &s(0, 1.0), &s(1, 1.0), 0.5).unwrap();
        assert_eq!(g, -2.0);
        let g = sp.cat0_gap(&s(2, 1.0), &s(0, 1.0), &s(1, 1.0), 0.0).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn reshetnyak_examples() {
        let h = SpaceHandle::euclidean(1).unwrap();
        let p = e(&[0.3]);
        assert_eq!(h.reshetnyak_gap(&p, &p, &p, &p).unwrap(), 0.0);
        assert_eq!(h.reshetnyak_gap(&e(&[0.0]), &e(&[1.0]), &e(&[1.0]), &e(&[0.0])).unwrap(), 0.0);
        let sp = SpaceHandle::spider(3).unwrap();
        // d(x,y)=2, d(u,v)=3, d(x,v)=2, d(y,u)=1, d(x,u)=3, d(y,v)=2: 4+9−4−1−12 = −4
        let g = sp.reshetnyak_gap(&s(0, 1.0), &s(1, 1.0), &s(1, 2.0), &s(2, 1.0)).unwrap();
        assert_eq!(g, -4.0);
    }

    #[test]
    fn project_ball_examples() {
        let h = SpaceHandle::euclidean(2).unwrap();
        let ball = GeodesicBall::new(e(&[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(h.project_ball(&ball, &e(&[2.0, 0.0])).unwrap(), e(&[1.0, 0.0]));
        assert_eq!(h.project_ball(&ball, &e(&[0.5, 0.1])).unwrap(), e(&[0.5, 0.1]));
        let sp = SpaceHandle::spider(3).unwrap();
        let ball = GeodesicBall::new(s(0, 0.0), 1.0).unwrap();
        assert_eq!(sp.project_ball(&ball, &s(1, 3.0)).unwrap(), s(1, 1.0));
        assert!(GeodesicBall::new(s(0, 0.0), -1.0).is_err());
    }
}
