//! Oracles shared by the integration suites.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and eigenvectors (columns of `v`).
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Smallest eigenvalue of `A x = λ M x` via `M^{-1/2} A M^{-1/2}`.
pub fn oracle_smallest(a: &[Vec<f64>], m: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let (mu, q) = jacobi_eigen(m.to_vec());
    // S = Q diag(μ^{-1/2}) Qᵀ
    let mut s = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            s[i][j] = (0..n).map(|k| q[i][k] * q[j][k] / mu[k].sqrt()).sum();
        }
    }
    let mul = |x: &[Vec<f64>], y: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| x[i][k] * y[k][j]).sum()).collect())
            .collect()
    };
    let c = mul(&mul(&s, a), &s);
    let (ev, _) = jacobi_eigen(c);
    ev.into_iter().fold(f64::INFINITY, f64::min)
}

/// Seeded random pencils `(A, M)`: `A` symmetric indefinite, `M = BᵀB + I`.
pub fn random_pencils(seed: u64, count: usize) -> Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(2..=14);
            let mut a = vec![vec![0.0; n]; n];
            let mut b = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    b[i][j] = rng.gen_range(-1.0..1.0);
                }
                for j in 0..=i {
                    let v = rng.gen_range(-5.0..5.0);
                    a[i][j] = v;
                    a[j][i] = v;
                }
            }
            let mut m = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    m[i][j] = (0..n).map(|k| b[k][i] * b[k][j]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
                }
            }
            (a, m)
        })
        .collect()
}

pub fn to_dense(a: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), a.len(), |i, j| a[i][j])
}

/// Worst relative eigenvalue mismatch of `smallest_eigpair` against the
/// Jacobi oracle, and worst relative residual, over the given pencils.
pub fn dense_oracle_mismatch(pencils: &[(Vec<Vec<f64>>, Vec<Vec<f64>>)]) -> (f64, f64) {
    let mut worst = (0.0f64, 0.0f64);
    for (a, m) in pencils {
        let expect = oracle_smallest(a, m);
        let (ad, md) = (to_dense(a), to_dense(m));
        let (lambda, x) = nlfmg::eigsolve::smallest_eigpair(&ad, &md, None).unwrap();
        let xv = nalgebra::DVector::from_column_slice(&x);
        let r = &ad * &xv - &md * &xv * lambda;
        worst.0 = worst.0.max((lambda - expect).abs() / expect.abs().max(1.0));
        worst.1 = worst.1.max(r.norm() / (1.0 + lambda.abs()));
    }
    worst
}
