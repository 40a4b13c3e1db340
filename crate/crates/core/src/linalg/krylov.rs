//! Conjugate gradient smoothing and solves.

use super::csr::CsrMatrix;
use super::vector::{axpy, dot, norm2};
use super::work::WorkReport;
use crate::error::{Error, Result};

/// Result of a fixed number of CG steps.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    /// Steps actually taken (fewer than requested on zero residual or breakdown).
    pub steps_taken: usize,
    /// A search direction with nonpositive curvature was met.
    pub breakdown: bool,
}

/// Run `steps` conjugate gradient iterations on `A x = b` from `x0`.
///
/// Stops early on an exactly zero residual (returns the iterate unchanged)
/// and on breakdown (`pᵀAp <= 0`), which is flagged in the outcome.
pub fn cg_smooth(
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    steps: usize,
    work: &mut WorkReport,
) -> CgOutcome {
    let n = b.len();
    assert_eq!(a.nrows(), n);
    assert_eq!(x0.len(), n);
    let mut x = x0.to_vec();
    if steps == 0 || n == 0 {
        return CgOutcome {
            x,
            steps_taken: 0,
            breakdown: false,
        };
    }
    let mut r = a.matvec(&x);
    work.add_matvec(a.nnz());
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut ap = vec![0.0; n];
    let mut taken = 0;
    let mut breakdown = false;
    while taken < steps {
        if rr == 0.0 {
            break;
        }
        a.matvec_into(&p, &mut ap);
        work.add_matvec(a.nnz());
        let curvature = dot(&p, &ap);
        if curvature <= 0.0 || !curvature.is_finite() {
            breakdown = true;
            break;
        }
        let alpha = rr / curvature;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        taken += 1;
    }
    CgOutcome {
        x,
        steps_taken: taken,
        breakdown,
    }
}

/// Preconditioned CG to a relative residual tolerance `‖b − Ax‖ ≤ rel_tol ‖b‖`.
///
/// `precond` maps a residual to a correction; `None` is plain CG. The
/// residual is recomputed explicitly before convergence is accepted.
pub fn pcg_solve(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    rel_tol: f64,
    max_iter: usize,
    mut precond: Option<&mut dyn FnMut(&[f64], &mut WorkReport) -> Vec<f64>>,
    work: &mut WorkReport,
) -> Result<Vec<f64>> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let residual = |x: &[f64], work: &mut WorkReport| {
        let mut r = a.matvec(x);
        work.add_matvec(a.nnz());
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        r
    };
    let mut r = residual(&x, work);
    let mut iterations = 0;
    let mut ap = vec![0.0; n];
    'restart: loop {
        if norm2(&r) <= rel_tol * bnorm {
            return Ok(x);
        }
        let apply = |r: &[f64], precond: &mut Option<&mut dyn FnMut(&[f64], &mut WorkReport) -> Vec<f64>>, work: &mut WorkReport| match precond {
            Some(m) => m(r, work),
            None => r.to_vec(),
        };
        let mut z = apply(&r, &mut precond, work);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            a.matvec_into(&p, &mut ap);
            work.add_matvec(a.nnz());
            let curvature = dot(&p, &ap);
            if curvature <= 0.0 || !curvature.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let alpha = rz / curvature;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            iterations += 1;
            if norm2(&r) <= rel_tol * bnorm {
                // confirm against the true residual
                r = residual(&x, work);
                if norm2(&r) <= rel_tol * bnorm {
                    return Ok(x);
                }
                continue 'restart;
            }
            z = apply(&r, &mut precond, work);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
        let r = residual(&x, work);
        return Err(Error::LinearSolver {
            residual: norm2(&r) / bnorm,
            iterations,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn zero_residual_returns_iterate_unchanged() {
        let a = laplace_1d(5);
        let xs = vec![1.0, -1.0, 2.0, 0.5, 3.0];
        let b = a.matvec(&xs);
        let out = cg_smooth(&a, &b, &xs, 3, &mut WorkReport::default());
        assert_eq!(out.x, xs);
        assert_eq!(out.steps_taken, 0);
        assert!(!out.breakdown);
    }

    #[test]
    fn full_dimension_steps_solve_exactly() {
        let n = 8;
        let a = laplace_1d(n);
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let b = a.matvec(&xs);
        let out = cg_smooth(&a, &b, &vec![0.0; n], n, &mut WorkReport::default());
        for (u, v) in out.x.iter().zip(&xs) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_matrix_flags_breakdown() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        let out = cg_smooth(&a, &[0.0, 1.0], &[0.0, 0.0], 2, &mut WorkReport::default());
        assert!(out.breakdown);
    }

    #[test]
    fn pcg_reaches_tolerance() {
        let a = laplace_1d(40);
        let b = vec![1.0; 40];
        let x = pcg_solve(&a, &b, None, 1e-12, 200, None, &mut WorkReport::default()).unwrap();
        let r: Vec<f64> = a.matvec(&x).iter().zip(&b).map(|(u, v)| u - v).collect();
        assert!(norm2(&r) <= 1e-12 * norm2(&b));
    }
}
