//! Single-vector preconditioned conjugate gradient eigensolver (LOBPCG) for
//! large sparse pencils.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::vector::{axpy, dot, norm2, scale};
use crate::linalg::{CsrMatrix, WorkReport};

/// Preconditioner `r ↦ T r`.
pub type Preconditioner<'a> = dyn FnMut(&[f64], &mut WorkReport) -> Result<Vec<f64>> + 'a;

/// Smallest eigenpair of `A x = λ M x` to relative residual `tol`, starting
/// from `x0`. The returned vector is M-normalized and oriented so that
/// `xᵀ M x0 ≥ 0`.
pub fn lobpcg(
    a: &CsrMatrix,
    m: &CsrMatrix,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
    precond: &mut Preconditioner<'_>,
    work: &mut WorkReport,
) -> Result<(f64, Vec<f64>)> {
    let n = a.nrows();
    if x0.len() != n || m.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    let mv = |mat: &CsrMatrix, v: &[f64], work: &mut WorkReport| {
        work.add_matvec(mat.nnz());
        mat.matvec(v)
    };

    let mut x = x0.to_vec();
    let mx0 = mv(m, x0, work);
    let nx = dot(&x, &mx0).sqrt();
    if !(nx > 0.0) {
        return Err(Error::InvalidArgument("zero initial vector".into()));
    }
    scale(1.0 / nx, &mut x);
    let mut p: Option<Vec<f64>> = None;
    let mut best = f64::INFINITY;

    for _ in 0..max_iter {
        let ax = mv(a, &x, work);
        let mx = mv(m, &x, work);
        let rho = dot(&x, &ax);
        let mut r = ax.clone();
        axpy(-rho, &mx, &mut r);
        let res = norm2(&r) / norm2(&ax).max(f64::MIN_POSITIVE);
        best = best.min(res);
        if res <= tol {
            if dot(&x, &mx0) < 0.0 {
                scale(-1.0, &mut x);
            }
            return Ok((rho, x));
        }
        let w = precond(&r, work)?;

        // M-orthonormal basis of span{x, w, p}
        let mut basis: Vec<Vec<f64>> = vec![x.clone()];
        let mut mbasis: Vec<Vec<f64>> = vec![mx];
        for cand in std::iter::once(w).chain(p.take()) {
            let mut v = cand;
            let mut mvv = mv(m, &v, work);
            let norm0 = dot(&v, &mvv).sqrt();
            for _pass in 0..2 {
                for (b, mb) in basis.iter().zip(&mbasis) {
                    let c = dot(b, &mvv);
                    axpy(-c, b, &mut v);
                    axpy(-c, mb, &mut mvv);
                }
            }
            let nv = dot(&v, &mvv).max(0.0).sqrt();
            if nv > 1e-10 * norm0 && nv > 0.0 {
                scale(1.0 / nv, &mut v);
                scale(1.0 / nv, &mut mvv);
                work.add_matvec(4 * n * basis.len());
                basis.push(v);
                mbasis.push(mvv);
            }
        }
        let k = basis.len();
        let abasis: Vec<Vec<f64>> = basis.iter().map(|b| mv(a, b, work)).collect();
        let mut g = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = dot(&basis[i], &abasis[j]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(g);
        let imin = (0..k)
            .min_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]))
            .unwrap();
        let c = eig.eigenvectors.column(imin);
        let mut xn = vec![0.0; n];
        let mut pn = vec![0.0; n];
        for (i, b) in basis.iter().enumerate() {
            axpy(c[i], b, &mut xn);
            if i > 0 {
                axpy(c[i], b, &mut pn);
            }
        }
        let mxn = mv(m, &xn, work);
        let nn = dot(&xn, &mxn).sqrt();
        scale(1.0 / nn, &mut xn);
        scale(1.0 / nn, &mut pn);
        x = xn;
        p = if k > 1 { Some(pn) } else { None };
    }
    Err(Error::EigenSolver {
        residual: best,
        iterations: max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_laplacian() {
        // 1D Dirichlet Laplacian: λ_min = 2 - 2 cos(π/(n+1))
        let n = 60;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let m = CsrMatrix::identity(n);
        let x0: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let mut id = |r: &[f64], _: &mut WorkReport| Ok(r.to_vec());
        let (l, x) = lobpcg(&a, &m, &x0, 1e-10, 2000, &mut id, &mut WorkReport::default()).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n + 1) as f64).cos();
        assert!((l - exact).abs() < 1e-12);
        assert!((norm2(&x) - 1.0).abs() < 1e-12);
        assert!(x.iter().all(|&v| v > 0.0));
    }
}
