//! P1 functions over the interior degrees of freedom of one level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// Coefficients over the interior vertices of level `level_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeFunction {
    level_index: usize,
    coefficients: Vec<f64>,
}

impl FeFunction {
    pub fn new(level_index: usize, coefficients: Vec<f64>) -> Self {
        Self {
            level_index,
            coefficients,
        }
    }

    pub fn zeros(level_index: usize, n: usize) -> Self {
        Self::new(level_index, vec![0.0; n])
    }

    pub fn level_index(&self) -> usize {
        self.level_index
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

fn quadratic(u: &[f64], matrix: &CsrMatrix) -> Result<f64> {
    if matrix.nrows() != u.len() || matrix.ncols() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: matrix.nrows(),
            got: u.len(),
        });
    }
    Ok(matrix.quadratic_form(u).max(0.0))
}

/// Energy norm `sqrt(uᵀ Â u)`.
pub fn a_norm(u: &FeFunction, stiffness: &CsrMatrix) -> Result<f64> {
    quadratic(u.coefficients(), stiffness).map(f64::sqrt)
}

/// `L²` norm `sqrt(uᵀ M u)`.
pub fn l2_norm(u: &FeFunction, mass: &CsrMatrix) -> Result<f64> {
    quadratic(u.coefficients(), mass).map(f64::sqrt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_of_zero_and_sign_flip() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
        assert_eq!(a_norm(&FeFunction::zeros(0, 2), &a).unwrap(), 0.0);
        let u = FeFunction::new(0, vec![0.3, -1.2]);
        let v = FeFunction::new(0, vec![-0.3, 1.2]);
        assert_eq!(a_norm(&u, &a).unwrap(), a_norm(&v, &a).unwrap());
        assert!(l2_norm(&FeFunction::zeros(0, 3), &a).is_err());
    }
}
