//! Orientation-preserving affine maps `x ↦ A x + b`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Invertible affine map with cached determinant, inverse and operator norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AffineDoc", into = "AffineDoc")]
pub struct AffineMap {
    a: DMatrix<f64>,
    b: DVector<f64>,
    a_inv: DMatrix<f64>,
    det: f64,
    norm: f64,
    norm_adj: f64,
}

#[derive(Serialize, Deserialize)]
struct AffineDoc {
    linear: Vec<Vec<f64>>,
    translation: Vec<f64>,
}

impl TryFrom<AffineDoc> for AffineMap {
    type Error = GeometryError;
    fn try_from(d: AffineDoc) -> Result<Self, Self::Error> {
        let n = d.translation.len();
        if d.linear.len() != n || d.linear.iter().any(|r| r.len() != n) {
            return Err(GeometryError::Malformed("affine map shape".into()));
        }
        let a = DMatrix::from_fn(n, n, |i, j| d.linear[i][j]);
        AffineMap::new(a, DVector::from_vec(d.translation))
    }
}

impl From<AffineMap> for AffineDoc {
    fn from(t: AffineMap) -> Self {
        let n = t.dim();
        AffineDoc {
            linear: (0..n).map(|i| (0..n).map(|j| t.a[(i, j)]).collect()).collect(),
            translation: t.b.iter().copied().collect(),
        }
    }
}

/// Largest singular value.
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

impl AffineMap {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self, GeometryError> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n || a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::Malformed("affine map shape".into()));
        }
        let det = a.determinant();
        if !(det > 0.0) {
            return Err(GeometryError::Malformed(format!("affine map has det {det}, expected > 0")));
        }
        let a_inv = a.clone().try_inverse().ok_or_else(|| GeometryError::Malformed("singular linear part".into()))?;
        let norm = operator_norm(&a);
        let norm_adj = operator_norm(&a.transpose());
        Ok(Self { a, b, a_inv, det, norm, norm_adj })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n), DVector::zeros(n)).expect("identity is invertible")
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn linear(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear_inverse(&self) -> &DMatrix<f64> {
        &self.a_inv
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// Operator norm `‖A‖`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Operator norm of the adjoint, `‖A*‖`.
    pub fn norm_adjoint(&self) -> f64 {
        self.norm_adj
    }

    /// The factor `(det A)^{2/n}` used to rescale function values.
    pub fn value_scale(&self) -> f64 {
        self.det.powf(2.0 / self.dim() as f64)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| self.b[i] + (0..n).map(|j| self.a[(i, j)] * x[j]).sum::<f64>()).collect()
    }

    pub fn apply2(&self, x: [f64; 2]) -> [f64; 2] {
        [
            self.a[(0, 0)] * x[0] + self.a[(0, 1)] * x[1] + self.b[0],
            self.a[(1, 0)] * x[0] + self.a[(1, 1)] * x[1] + self.b[1],
        ]
    }

    pub fn apply_inverse(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.a_inv[(i, j)] * (z[j] - self.b[j])).sum::<f64>()).collect()
    }

    pub fn apply_inverse2(&self, z: [f64; 2]) -> [f64; 2] {
        let (u, v) = (z[0] - self.b[0], z[1] - self.b[1]);
        [self.a_inv[(0, 0)] * u + self.a_inv[(0, 1)] * v, self.a_inv[(1, 0)] * u + self.a_inv[(1, 1)] * v]
    }

    pub fn inverse(&self) -> Self {
        let b = -(&self.a_inv * &self.b);
        Self::new(self.a_inv.clone(), b).expect("inverse of an admissible map")
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineMap) -> Self {
        Self::new(&self.a * &other.a, &self.a * &other.b + &self.b).expect("composition of admissible maps")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inverse_roundtrip() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 3.0]);
        let t = AffineMap::new(a, DVector::from_vec(vec![1.0, -2.0])).unwrap();
        let x = [0.3, -0.7];
        let y = t.apply_inverse2(t.apply2(x));
        assert!((y[0] - x[0]).abs() < 1e-14 && (y[1] - x[1]).abs() < 1e-14);
        let id = t.compose(&t.inverse());
        assert!((id.linear() - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!(id.translation().norm() < 1e-12);
    }

    #[test]
    fn reflections_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(AffineMap::new(a, DVector::zeros(2)).is_err());
    }

    proptest! {
        #[test]
        fn adjoint_norm_identity(e in proptest::collection::vec(-3.0f64..3.0, 4)) {
            let mut a = DMatrix::from_row_slice(2, 2, &e);
            if a.determinant() < 0.0 {
                a.swap_columns(0, 1);
            }
            prop_assume!(a.determinant() > 1e-3);
            let t = AffineMap::new(a.clone(), DVector::zeros(2)).unwrap();
            let ata = operator_norm(&(a.transpose() * &a));
            prop_assert!((ata - t.norm_adjoint() * t.norm()).abs() <= 1e-9 * t.norm().powi(2));
        }
    }
}
