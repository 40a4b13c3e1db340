//! Small dense-vector kernels on slices.

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for v in x.iter_mut() {
        *v *= alpha;
    }
}

/// `x - y`
pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

/// `a * x + b * y`
pub fn lincomb(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + b * yi).collect()
}

/// Flip the sign of `x` so that its entry of largest magnitude is positive.
/// Ties resolve to the first such entry.
pub fn apply_sign_convention(x: &mut [f64]) {
    let mut best = 0.0_f64;
    let mut sign = 1.0;
    for &v in x.iter() {
        if v.abs() > best {
            best = v.abs();
            sign = v.signum();
        }
    }
    if sign < 0.0 {
        scale(-1.0, x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_convention_makes_largest_entry_positive() {
        let mut x = vec![0.5, -2.0, 1.0];
        apply_sign_convention(&mut x);
        assert_eq!(x, vec![-0.5, 2.0, -1.0]);
        let mut y = vec![0.5, 2.0, -1.0];
        apply_sign_convention(&mut y);
        assert_eq!(y, vec![0.5, 2.0, -1.0]);
    }

    #[test]
    fn kernels() {
        let x = [1.0, 2.0, 2.0];
        assert_eq!(norm2(&x), 3.0);
        assert_eq!(norm_inf(&[-4.0, 1.0]), 4.0);
        let mut y = vec![1.0, 1.0, 1.0];
        axpy(2.0, &x, &mut y);
        assert_eq!(y, vec![3.0, 5.0, 5.0]);
        assert_eq!(lincomb(1.0, &x, -1.0, &y), vec![-2.0, -3.0, -3.0]);
    }
}
