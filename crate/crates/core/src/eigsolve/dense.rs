//! Smallest eigenpair of a small symmetric-definite pencil by shifted
//! inverse iteration.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::WorkReport;

/// Relative residual target `‖Ax − λMx‖ ≤ tol ‖Ax‖`.
pub const EIG_TOL: f64 = 1e-10;
const MAX_ITER: usize = 500;

/// Inverse iteration for pencils `(A, M)` sharing one mass matrix. The mass
/// factorization and the last accepted shift are kept between solves, so a
/// sequence of nearby operators (an SCF run) factors little.
#[derive(Debug, Clone)]
pub struct DensePencilSolver {
    m: DMatrix<f64>,
    m_chol: Cholesky<f64, Dyn>,
    shift: Option<f64>,
}

impl DensePencilSolver {
    pub fn new(m: DMatrix<f64>, work: &mut WorkReport) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidArgument("mass matrix must be square and nonempty".into()));
        }
        let n = m.nrows();
        work.add_dense(n * n * n / 3);
        let m_chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { m, m_chol, shift: None })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    fn factor(&self, a: &DMatrix<f64>, sigma: f64, work: &mut WorkReport) -> Option<Cholesky<f64, Dyn>> {
        let n = self.dim();
        work.add_dense(n * n * n / 3 + n * n);
        (a - &self.m * sigma).cholesky()
    }

    fn m_norm(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.m * v)).sqrt()
    }

    /// Distance bound `‖r‖_{M⁻¹}` from `ρ` to the nearest eigenvalue.
    fn residual_bound(&self, r: &DVector<f64>) -> f64 {
        self.m_chol.l().solve_lower_triangular(r).map_or(f64::INFINITY, |z| z.norm())
    }

    /// A shift strictly below the smallest eigenvalue and the factor of
    /// `A − σM`.
    fn initial_shift(
        &self,
        a: &DMatrix<f64>,
        x: &DVector<f64>,
        work: &mut WorkReport,
    ) -> Result<(f64, Cholesky<f64, Dyn>)> {
        let n = self.dim();
        let m = &self.m;
        let mut tried = f64::INFINITY;
        let mut candidates = Vec::with_capacity(2);
        if let Some(s) = self.shift {
            candidates.push(s);
        }
        // Rayleigh quotient of the start vector minus its residual bound
        let ax = a * x;
        let rho = x.dot(&ax) / x.dot(&(m * x));
        let bound = self.residual_bound(&(&ax - m * x * rho));
        candidates.push(rho - 1.5 * bound);
        for s in candidates {
            if s.is_finite() {
                if let Some(c) = self.factor(a, s, work) {
                    return Ok((s, c));
                }
                tried = tried.min(s);
            }
        }
        // e_iᵀAe_i / e_iᵀMe_i bounds λ_min from above; back off from there
        let ratio = (0..n).map(|i| a[(i, i)] / m[(i, i)]).fold(f64::INFINITY, f64::min);
        let base = ratio.min(tried);
        let mut gap = 1e-2 * base.abs().max(1.0);
        loop {
            let s = base - gap;
            if let Some(c) = self.factor(a, s, work) {
                return Ok((s, c));
            }
            gap *= 4.0;
            if !gap.is_finite() || gap > 1e300 {
                return Err(Error::NotPositiveDefinite);
            }
        }
    }

    /// Algebraically smallest eigenpair of `A x = λ M x`, `xᵀMx = 1`. With
    /// a `guess` the vector is oriented so that `xᵀ M guess ≥ 0`; without
    /// one the coefficient of largest magnitude is positive.
    pub fn smallest(
        &mut self,
        a: &DMatrix<f64>,
        guess: Option<&[f64]>,
        work: &mut WorkReport,
    ) -> Result<(f64, Vec<f64>)> {
        let n = self.dim();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.nrows(),
            });
        }
        let mut x = match guess {
            Some(g) if g.len() == n && g.iter().any(|&v| v != 0.0) => DVector::from_column_slice(g),
            _ => DVector::from_element(n, 1.0),
        };
        let reference = x.clone();
        x /= self.m_norm(&x);
        let (mut sigma, mut chol) = self.initial_shift(a, &x, work)?;

        let mut best = f64::INFINITY;
        for it in 0..MAX_ITER {
            let y = chol.solve(&(&self.m * &x));
            x = &y / self.m_norm(&y);
            let ax = a * &x;
            let mx = &self.m * &x;
            let rho = x.dot(&ax);
            let r = &ax - &mx * rho;
            work.add_dense(5 * n * n);
            let res = r.norm() / ax.norm().max(rho.abs() * mx.norm()).max(f64::MIN_POSITIVE);
            best = best.min(res);
            if res <= EIG_TOL {
                self.shift = Some(sigma);
                let mut v: Vec<f64> = x.iter().copied().collect();
                if guess.is_some() {
                    if x.dot(&(&self.m * &reference)) < 0.0 {
                        v.iter_mut().for_each(|c| *c = -*c);
                    }
                } else {
                    crate::linalg::vector::apply_sign_convention(&mut v);
                }
                return Ok((rho, v));
            }
            if it % 2 == 1 {
                // move the shift toward ρ; some eigenvalue lies within the
                // residual bound of ρ
                let candidate = rho - 1.5 * self.residual_bound(&r) - 1e-14 * rho.abs();
                if candidate > sigma {
                    if let Some(c) = self.factor(a, candidate, work) {
                        sigma = candidate;
                        chol = c;
                    }
                }
            }
        }
        Err(Error::EigenSolver {
            residual: best,
            iterations: MAX_ITER,
        })
    }
}

/// Algebraically smallest eigenpair of `A x = λ M x`, with `xᵀMx = 1` and
/// the coefficient of largest magnitude positive (or, when `guess` is
/// given, `xᵀ M guess ≥ 0`).
pub fn smallest_eigpair(a: &DMatrix<f64>, m: &DMatrix<f64>, guess: Option<&[f64]>) -> Result<(f64, Vec<f64>)> {
    smallest_eigpair_counted(a, m, guess, &mut WorkReport::default())
}

pub fn smallest_eigpair_counted(
    a: &DMatrix<f64>,
    m: &DMatrix<f64>,
    guess: Option<&[f64]>,
    work: &mut WorkReport,
) -> Result<(f64, Vec<f64>)> {
    if a.nrows() != m.nrows() || a.ncols() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: m.nrows(),
        });
    }
    DensePencilSolver::new(m.clone(), work)?.smallest(a, guess, work)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pencil() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let m = DMatrix::identity(3, 3);
        let (l, x) = smallest_eigpair(&a, &m, None).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-10 && x[1].abs() < 1e-10 && x[2].abs() < 1e-10);
    }

    #[test]
    fn identity_pencil() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let (l, _) = smallest_eigpair(&m, &m, None).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_spectrum() {
        let a = DMatrix::from_row_slice(2, 2, &[-5.0, 1.0, 1.0, 3.0]);
        let m = DMatrix::identity(2, 2);
        let (l, _) = smallest_eigpair(&a, &m, None).unwrap();
        let exact = -1.0 - 17f64.sqrt();
        assert!((l - exact).abs() < 1e-10);
    }

    #[test]
    fn indefinite_mass_is_rejected() {
        let a = DMatrix::identity(2, 2);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(smallest_eigpair(&a, &m, None), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn stale_shift_above_the_spectrum_is_recovered() {
        let m = DMatrix::identity(3, 3);
        let mut solver = DensePencilSolver::new(m, &mut WorkReport::default()).unwrap();
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 6.0, 7.0]));
        solver.smallest(&a, None, &mut WorkReport::default()).unwrap();
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 6.0, 7.0]));
        let (l, _) = solver.smallest(&b, None, &mut WorkReport::default()).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
    }
}
