//! Problem data: diffusion tensor, potential and nonlinearity.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// External potential `W(x) ≥ 0`.
#[derive(Clone)]
pub enum Potential {
    /// `W ≡ 0`
    Zero,
    /// `W(x) = |x|²`
    Harmonic,
    /// User field. Quadrature is exact only if it is a polynomial of degree ≤ 2.
    Field(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl Potential {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Harmonic => x.iter().map(|v| v * v).sum(),
            Potential::Field(f) => f(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Zero)
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Zero => write!(f, "Zero"),
            Potential::Harmonic => write!(f, "Harmonic"),
            Potential::Field(_) => write!(f, "Field(..)"),
        }
    }
}

/// PDE data for `-div(A grad u) + W u + zeta |u|^(2 sigma) u = lambda u`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    dim: usize,
    /// Row-major `dim × dim` constant SPD tensor.
    diffusion: Vec<f64>,
    potential: Potential,
    zeta: f64,
    sigma: u32,
}

impl ProblemSpec {
    /// Identity diffusion.
    pub fn new(dim: usize, potential: Potential, zeta: f64, sigma: u32) -> Result<Self> {
        let mut identity = vec![0.0; dim * dim];
        for i in 0..dim {
            identity[i * dim + i] = 1.0;
        }
        Self::with_diffusion(dim, identity, potential, zeta, sigma)
    }

    pub fn with_diffusion(
        dim: usize,
        diffusion: Vec<f64>,
        potential: Potential,
        zeta: f64,
        sigma: u32,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidArgument(format!("unsupported dimension {dim}")));
        }
        if diffusion.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: diffusion.len(),
            });
        }
        let a = DMatrix::from_row_slice(dim, dim, &diffusion);
        if (0..dim).any(|i| (0..dim).any(|j| a[(i, j)] != a[(j, i)])) {
            return Err(Error::InvalidArgument("diffusion tensor is not symmetric".into()));
        }
        if a.cholesky().is_none() {
            return Err(Error::InvalidArgument(
                "diffusion tensor is not positive definite".into(),
            ));
        }
        if !(zeta >= 0.0) || !zeta.is_finite() {
            return Err(Error::InvalidArgument(format!("zeta must be >= 0, got {zeta}")));
        }
        if sigma == 0 {
            return Err(Error::InvalidArgument("sigma must be >= 1".into()));
        }
        Ok(Self {
            dim,
            diffusion,
            potential,
            zeta,
            sigma,
        })
    }

    /// The Gross-Pitaevskii test problem: harmonic potential, cubic nonlinearity.
    pub fn gross_pitaevskii(dim: usize, zeta: f64) -> Result<Self> {
        Self::new(dim, Potential::Harmonic, zeta, 1)
    }

    /// `-Δu = λu`.
    pub fn laplace(dim: usize) -> Result<Self> {
        Self::new(dim, Potential::Zero, 0.0, 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn sigma(&self) -> u32 {
        self.sigma
    }

    pub fn is_linear(&self) -> bool {
        self.zeta == 0.0
    }

    /// Pointwise `f(x, u) = W(x) u + zeta |u|^(2 sigma) u`.
    pub fn nonlinearity(&self, x: &[f64], u: f64) -> f64 {
        self.potential.eval(x) * u + self.zeta * u.abs().powi(2 * self.sigma as i32) * u
    }

    /// Polynomial degree of `|w|^(2 sigma) φ_i φ_j` for P1 `w`.
    pub fn nonlinear_integrand_degree(&self) -> usize {
        2 * self.sigma as usize + 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_indefinite_diffusion() {
        let r = ProblemSpec::with_diffusion(2, vec![1.0, 2.0, 2.0, 1.0], Potential::Zero, 0.0, 1);
        assert!(r.is_err());
        let r = ProblemSpec::with_diffusion(2, vec![1.0, 0.5, 0.0, 1.0], Potential::Zero, 0.0, 1);
        assert!(r.is_err());
    }

    #[test]
    fn rejects_negative_zeta() {
        assert!(ProblemSpec::gross_pitaevskii(2, -1.0).is_err());
        assert!(ProblemSpec::gross_pitaevskii(2, f64::NAN).is_err());
    }

    #[test]
    fn nonlinearity_is_gpe() {
        let p = ProblemSpec::gross_pitaevskii(2, 3.0).unwrap();
        let x = [0.5, 1.0];
        let u = -0.5;
        assert_eq!(p.nonlinearity(&x, u), 1.25 * u + 3.0 * 0.25 * u);
    }
}
