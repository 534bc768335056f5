use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanPoint(Vec<f64>);

impl EuclideanPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return invalid("euclidean point needs at least one coordinate");
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return invalid("euclidean coordinates must be finite");
        }
        Ok(EuclideanPoint(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

pub fn distance(p: &EuclideanPoint, q: &EuclideanPoint) -> f64 {
    p.0.iter().zip(&q.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub fn geodesic(p: &EuclideanPoint, q: &EuclideanPoint, t: f64) -> EuclideanPoint {
    EuclideanPoint(p.0.iter().zip(&q.0).map(|(a, b)| a + t * (b - a)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> EuclideanPoint {
        EuclideanPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(distance(&p(&[1.0, 1.0]), &p(&[1.0, 1.0])), 0.0);
        assert_eq!(geodesic(&p(&[0.0, 0.0]), &p(&[4.0, 0.0]), 0.75), p(&[3.0, 0.0]));
        assert_eq!(distance(&p(&[0.0, 0.0, 0.0]), &p(&[1.0, 2.0, 2.0])), 3.0);
    }

    #[test]
    fn rejects_bad_coordinates() {
        assert!(EuclideanPoint::new(vec![]).is_err());
        assert!(EuclideanPoint::new(vec![1.0, f64::NAN]).is_err());
    }
}
