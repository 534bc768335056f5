//! Symmetric positive definite matrices with the affine-invariant metric
//! `⟨X,Y⟩_A = Tr(A⁻¹XA⁻¹Y)`.
//!
//! Distance and geodesics use the closed forms
//! `d(A,B) = ‖log(A^{-1/2} B A^{-1/2})‖_F` and
//! `γ(t) = A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}`.
//! All matrix functions go through a symmetric eigendecomposition with the
//! eigenvalues clamped from below at the space tolerance.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Result};

const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpdPoint {
    matrix: DMatrix<f64>,
}

impl SpdPoint {
    /// Validates symmetry (relative 1e-12) and positive definiteness
    /// (smallest eigenvalue at least `tolerance`, or strictly positive when
    /// the tolerance is zero). The stored matrix is exactly symmetrized.
    pub fn new(matrix: DMatrix<f64>, tolerance: f64) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return invalid("SPD point must be a nonempty square matrix");
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return invalid("SPD entries must be finite");
        }
        let scale = matrix.amax().max(1.0);
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > SYMMETRY_TOLERANCE * scale {
            return invalid(format!("matrix is not symmetric (max asymmetry {asym:e})"));
        }
        let matrix = symmetrize(matrix);
        let min_eig = matrix.clone().symmetric_eigenvalues().min();
        if min_eig < tolerance || min_eig <= 0.0 {
            return invalid(format!("matrix is not positive definite (smallest eigenvalue {min_eig:e})"));
        }
        Ok(SpdPoint { matrix })
    }

    pub fn from_row_major(order: usize, values: &[f64], tolerance: f64) -> Result<Self> {
        if values.len() != order * order {
            return invalid(format!("expected {} entries for order {order}, got {}", order * order, values.len()));
        }
        Self::new(DMatrix::from_row_slice(order, order, values), tolerance)
    }

    pub fn identity(order: usize) -> Self {
        SpdPoint { matrix: DMatrix::identity(order, order) }
    }

    pub(crate) fn from_trusted(matrix: DMatrix<f64>) -> Self {
        SpdPoint { matrix: symmetrize(matrix) }
    }

    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.order();
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| self.matrix[(i, j)]).collect()
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn clamp_floor(tolerance: f64) -> f64 {
    if tolerance > 0.0 {
        tolerance
    } else {
        f64::MIN_POSITIVE
    }
}

/// `V f(Λ) Vᵀ` for a symmetric eigendecomposition.
fn eig_map(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let fj = f(lambda);
        scaled.column_mut(j).scale_mut(fj);
    }
    symmetrize(scaled * v.transpose())
}

/// `A^{-1/2} B A^{-1/2}` together with `A^{1/2}`.
fn whiten(a: &SpdPoint, b: &SpdPoint, floor: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = a.matrix.clone().symmetric_eigen();
    let sqrt_a = eig_map(&eig, |l| l.max(floor).sqrt());
    let inv_sqrt_a = eig_map(&eig, |l| 1.0 / l.max(floor).sqrt());
    let m = symmetrize(&inv_sqrt_a * &b.matrix * &inv_sqrt_a);
    (m, sqrt_a)
}

pub fn distance(a: &SpdPoint, b: &SpdPoint, tolerance: f64) -> f64 {
    let floor = clamp_floor(tolerance);
    let (m, _) = whiten(a, b, floor);
    m.symmetric_eigenvalues().iter().map(|&l| l.max(floor).ln().powi(2)).sum::<f64>().sqrt()
}

pub fn geodesic(a: &SpdPoint, b: &SpdPoint, t: f64, tolerance: f64) -> SpdPoint {
    let floor = clamp_floor(tolerance);
    let (m, sqrt_a) = whiten(a, b, floor);
    let m_t = eig_map(&m.symmetric_eigen(), |l| l.max(floor).powf(t));
    SpdPoint::from_trusted(&sqrt_a * m_t * &sqrt_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn diag(v: &[f64]) -> SpdPoint {
        SpdPoint::new(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v)), 1e-12).unwrap()
    }

    #[test]
    fn distance_examples() {
        let i3 = SpdPoint::identity(3);
        assert!(distance(&i3, &i3, 1e-12).abs() < 1e-14);
        assert!((distance(&diag(&[1.0, 1.0]), &diag(&[E * E, 1.0]), 1e-12) - 2.0).abs() < 1e-12);
        assert!((distance(&diag(&[E, E]), &SpdPoint::identity(2), 1e-12) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn geodesic_examples() {
        let a = diag(&[1.0, 1.0]);
        let b = diag(&[E * E, 1.0]);
        let mid = geodesic(&a, &b, 0.5, 1e-12);
        assert!((mid.matrix() - diag(&[E, 1.0]).matrix()).amax() < 1e-12);
        let c = 3.7;
        let ci = diag(&[c, c, c]);
        let g = geodesic(&ci, &SpdPoint::identity(3), 0.3, 1e-12);
        let expected = c.powf(0.7);
        assert!((g.matrix() - DMatrix::identity(3, 3) * expected).amax() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(SpdPoint::from_row_major(2, &[1.0, 0.5, 0.4, 1.0], 1e-12).is_err());
        assert!(SpdPoint::from_row_major(2, &[1.0, 2.0, 2.0, 1.0], 1e-12).is_err());
        assert!(SpdPoint::from_row_major(2, &[1.0, 0.0, 0.0], 1e-12).is_err());
        let p = SpdPoint::from_row_major(2, &[2.0, 0.5, 0.5, 1.0], 1e-12).unwrap();
        assert_eq!(p.to_row_major(), vec![2.0, 0.5, 0.5, 1.0]);
    }
}
