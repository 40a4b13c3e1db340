//! Symmetric simplex quadrature in barycentric coordinates.

use crate::error::{Error, Result};

/// Quadrature rule on the reference simplex. Points are barycentric
/// coordinates (`dim + 1` entries); weights sum to one, so the integral over
/// a cell `K` is `|K| * Σ w_q f(x_q)`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub dim: usize,
    pub degree: usize,
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Cheapest available rule exact to `degree` on `dim`-simplices.
pub fn rule_for(dim: usize, degree: usize) -> Result<QuadratureRule> {
    match (dim, degree) {
        (2, 0..=4) => Ok(triangle_degree4()),
        (3, 0..=4) => Ok(tetrahedron_degree4()),
        _ => Err(Error::QuadratureUnavailable { dim, degree }),
    }
}

/// Dunavant's 6-point rule, exact for polynomials of degree 4.
pub fn triangle_degree4() -> QuadratureRule {
    const A1: f64 = 0.445_948_490_915_964_886_32;
    const W1: f64 = 0.223_381_589_678_011_465_70;
    const A2: f64 = 0.091_576_213_509_770_743_46;
    const W2: f64 = 0.109_951_743_655_321_867_64;
    let mut points = Vec::with_capacity(6);
    let mut weights = Vec::with_capacity(6);
    for (a, w) in [(A1, W1), (A2, W2)] {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a, b, 0.0], [a, b, a, 0.0], [b, a, a, 0.0]] {
            points.push(p);
            weights.push(w);
        }
    }
    QuadratureRule {
        dim: 2,
        degree: 4,
        points,
        weights,
    }
}

/// Keast's 11-point rule, exact for polynomials of degree 4. The centroid
/// weight is negative.
pub fn tetrahedron_degree4() -> QuadratureRule {
    let w0 = -74.0 / 5625.0 * 6.0;
    let w1 = 343.0 / 45000.0 * 6.0;
    let w2 = 56.0 / 2250.0 * 6.0;
    let s = (5.0_f64 / 14.0).sqrt();
    let a = (1.0 + s) / 4.0;
    let b = (1.0 - s) / 4.0;
    let mut points = vec![[0.25; 4]];
    let mut weights = vec![w0];
    for k in 0..4 {
        let mut p = [1.0 / 14.0; 4];
        p[k] = 11.0 / 14.0;
        points.push(p);
        weights.push(w1);
    }
    for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        let mut p = [b; 4];
        p[i] = a;
        p[j] = a;
        points.push(p);
        weights.push(w2);
    }
    QuadratureRule {
        dim: 3,
        degree: 4,
        points,
        weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Average of `Π λ_i^{α_i}` over a simplex: `d! Π α_i! / (|α| + d)!`.
    fn exact_monomial_mean(alpha: &[usize]) -> f64 {
        let d = alpha.len() - 1;
        let total: usize = alpha.iter().sum();
        factorial(d) * alpha.iter().map(|&a| factorial(a)).product::<f64>() / factorial(total + d)
    }

    fn all_exponents(nvars: usize, max_degree: usize) -> Vec<Vec<usize>> {
        if nvars == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for first in 0..=max_degree {
            for mut rest in all_exponents(nvars - 1, max_degree - first) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }

    fn check_exact(rule: &QuadratureRule) {
        let nb = rule.dim + 1;
        for alpha in all_exponents(nb, rule.degree) {
            let q: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| w * (0..nb).map(|i| p[i].powi(alpha[i] as i32)).product::<f64>())
                .sum();
            let exact = exact_monomial_mean(&alpha);
            assert!((q - exact).abs() < 1e-14, "alpha {alpha:?}: {q} vs {exact}");
        }
    }

    #[test]
    fn triangle_rule_is_degree_four_exact() {
        check_exact(&triangle_degree4());
    }

    #[test]
    fn tetrahedron_rule_is_degree_four_exact() {
        check_exact(&tetrahedron_degree4());
    }

    #[test]
    fn high_degree_is_unavailable() {
        assert!(rule_for(2, 6).is_err());
        assert!(rule_for(3, 5).is_err());
    }
}
