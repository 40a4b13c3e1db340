//! Exact solves for the coarsest grid and for test oracles.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::csr::CsrMatrix;
use super::krylov::pcg_solve;
use super::work::WorkReport;
use crate::error::{Error, Result};

/// Largest system factored densely by [`direct_solve`]; larger systems use CG.
pub const DENSE_DIRECT_LIMIT: usize = 2_500;

const DIRECT_TOL: f64 = 1e-12;

/// Dense Cholesky factorization of an SPD matrix.
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    factor: Cholesky<f64, Dyn>,
    n: usize,
}

impl DenseCholesky {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        Cholesky::new(a)
            .map(|factor| Self { factor, n })
            .ok_or(Error::NotPositiveDefinite)
    }

    pub fn from_csr(a: &CsrMatrix) -> Result<Self> {
        Self::new(a.to_dense())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entries traversed by the factorization.
    pub fn factor_cost(&self) -> usize {
        self.n * self.n * self.n / 3
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let x = self.factor.solve(&DVector::from_column_slice(b));
        x.as_slice().to_vec()
    }

    /// Entries traversed by one forward/backward substitution pair.
    pub fn solve_cost(&self) -> usize {
        self.n * self.n
    }
}

/// Solve `A x = b` for SPD `A` to `‖Ax − b‖ ≤ 1e-12 ‖b‖`.
///
/// Small systems are factored densely; larger ones use CG iterated to the
/// tolerance.
pub fn direct_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    direct_solve_counted(a, b, &mut WorkReport::default())
}

pub fn direct_solve_counted(a: &CsrMatrix, b: &[f64], work: &mut WorkReport) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if n <= DENSE_DIRECT_LIMIT {
        let chol = DenseCholesky::from_csr(a)?;
        work.add_dense(chol.factor_cost() + chol.solve_cost());
        Ok(chol.solve(b))
    } else {
        pcg_solve(a, b, None, DIRECT_TOL, 20 * n, None, work)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let b = vec![1.0, -2.0, 3.5];
        assert_eq!(direct_solve(&CsrMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn two_by_two_by_hand() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
        let x = direct_solve(&a, &[1.0, 1.0]).unwrap();
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((x[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(matches!(direct_solve(&a, &[1.0, 1.0]), Err(Error::NotPositiveDefinite)));
    }
}
