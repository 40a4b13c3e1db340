//! Self-consistent field iteration for the discrete nonlinear eigenproblem.

use serde::{Deserialize, Serialize};

use super::dense::{DensePencilSolver, EIG_TOL};
use super::lobpcg::lobpcg;
use crate::error::{Error, Result};
use crate::fem::{Discretization, FeFunction};
use crate::linalg::vector::{apply_sign_convention, dot, scale, sub};
use crate::linalg::{CsrMatrix, MgContext, SmootherSettings, WorkReport};

/// Level spaces up to this size are solved densely.
pub const DENSE_EIG_LIMIT: usize = 600;
const LOBPCG_MAX_ITER: usize = 1000;

/// Stopping and damping rules of the SCF iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScfSettings {
    /// Relative eigenvalue change `|Δλ| ≤ tol_lambda · max(1, |λ|)`.
    pub tol_lambda: f64,
    /// Iterate change in the `b`-norm.
    pub tol_u: f64,
    pub max_iter: usize,
    /// Initial mixing weight `α` of `w ← normalize(α v + (1 − α) w)`.
    pub damping: f64,
}

impl Default for ScfSettings {
    fn default() -> Self {
        Self {
            tol_lambda: 1e-10,
            tol_u: 1e-8,
            max_iter: 100,
            damping: 1.0,
        }
    }
}

impl ScfSettings {
    /// Settings for the small solves on augmented spaces (capped at 3 iterations).
    pub fn augmented() -> Self {
        Self {
            max_iter: 3,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_lambda > 0.0 && self.tol_u > 0.0) {
            return Err(Error::InvalidArgument("SCF tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("SCF max_iter must be >= 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }
}

/// Where an eigenpair was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceTag {
    /// A finite element space of the hierarchy.
    Level(usize),
    /// `V_H + span{ũ}` with `ũ` on `fine_level`.
    Augmented { coarse_level: usize, fine_level: usize },
}

/// `(λ, u)` with `b(u, u) = 1` and the sign convention applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda: f64,
    pub u: FeFunction,
    pub space_tag: SpaceTag,
}

/// How an SCF run ended.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScfReport {
    pub converged: bool,
    /// Linearized eigensolves performed.
    pub iterations: usize,
    /// Mixing weight in effect at the end.
    pub damping: f64,
    pub delta_lambda: f64,
    pub delta_u: f64,
}

/// Result of [`scf_solve`] in the coefficients of the space.
#[derive(Debug, Clone)]
pub struct ScfSolution {
    pub lambda: f64,
    pub coefficients: Vec<f64>,
    pub report: ScfReport,
}

/// A discrete space the SCF iteration can run on.
pub trait ScfSpace {
    type Operator;

    fn tag(&self) -> SpaceTag;
    fn dim(&self) -> usize;
    fn mass_apply(&self, x: &[f64], work: &mut WorkReport) -> Vec<f64>;
    /// `Â + M_W` (the initial-guess operator).
    fn linear_operator(&self, work: &mut WorkReport) -> Result<Self::Operator>;
    /// `A_lin(w) = Â + M_W + ζ M_{w^{2σ}}`.
    fn linearized(&self, w: &[f64], work: &mut WorkReport) -> Result<Self::Operator>;
    fn apply(&self, a: &Self::Operator, x: &[f64], work: &mut WorkReport) -> Vec<f64>;
    /// `xᵀ (Â + M_W) x`.
    fn linear_form(&self, x: &[f64], work: &mut WorkReport) -> f64;
    /// Exponent `σ` of the nonlinearity.
    fn sigma(&self) -> u32;
    /// Smallest eigenpair of `(a, M)`, M-normalized, oriented toward `guess`
    /// when one is given.
    fn smallest(&mut self, a: &Self::Operator, guess: Option<&[f64]>, work: &mut WorkReport) -> Result<(f64, Vec<f64>)>;
}

fn normalize<S: ScfSpace>(space: &S, x: &mut [f64], work: &mut WorkReport) -> Result<()> {
    let mx = space.mass_apply(x, work);
    let n = dot(x, &mx).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument("iterate has zero b-norm".into()));
    }
    scale(1.0 / n, x);
    Ok(())
}

struct Step<O> {
    alpha: f64,
    v: Vec<f64>,
    a: O,
    lambda: f64,
    e: f64,
}

/// `E(w) = ½ wᵀ(Â + M_W)w + ζ/(2σ+2) ∫ w^{2σ+2}`, from `λ = wᵀ A_lin(w) w`.
fn energy<S: ScfSpace>(space: &S, w: &[f64], lambda: f64, work: &mut WorkReport) -> f64 {
    let lin = space.linear_form(w, work);
    0.5 * lin + (lambda - lin) / (2 * space.sigma() + 2) as f64
}

fn b_norm<S: ScfSpace>(space: &S, x: &[f64], work: &mut WorkReport) -> f64 {
    dot(x, &space.mass_apply(x, work)).max(0.0).sqrt()
}

/// Fixed-point iteration: freeze the nonlinearity at `w`, take the ground
/// pair of the linearized pencil, mix, repeat. `λ` is the Rayleigh value
/// `wᵀ A_lin(w) w` of the final iterate. The mixing weight starts at
/// `settings.damping` each iteration and is chosen by a quadratic model of
/// the energy along the mixing path; a step that raises the energy is cut
/// back, and three consecutive rises are divergence.
/// Hitting `max_iter` is not an error; the report says whether the
/// tolerances were met.
pub fn scf_solve<S: ScfSpace>(
    space: &mut S,
    settings: &ScfSettings,
    initial: Option<&[f64]>,
    work: &mut WorkReport,
) -> Result<ScfSolution> {
    settings.validate()?;
    let n = space.dim();
    let mut w = match initial {
        Some(x) => {
            if x.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: x.len() });
            }
            x.to_vec()
        }
        None => {
            let l = space.linear_operator(work)?;
            space.smallest(&l, None, work)?.1
        }
    };
    normalize(space, &mut w, work)?;
    let mut a = space.linearized(&w, work)?;
    let mut lambda = dot(&w, &space.apply(&a, &w, work));
    let mut e = energy(space, &w, lambda, work);

    let mut report = ScfReport {
        damping: settings.damping,
        ..ScfReport::default()
    };
    for it in 1..=settings.max_iter {
        work.scf_iterations += 1;
        let (mu, g) = space.smallest(&a, Some(&w), work)?;
        // E'(0) along w → normalize(w + α(g − w)); ∇E(w) = A_lin(w) w
        let slope = ((mu - lambda) * dot(&w, &space.mass_apply(&g, work))).min(0.0);
        let tol_e = settings.tol_lambda * e.abs().max(1.0);
        let step = |alpha: f64, work: &mut WorkReport| -> Result<Step<S::Operator>> {
            let mut v: Vec<f64> = g.iter().zip(&w).map(|(gi, wi)| alpha * gi + (1.0 - alpha) * wi).collect();
            normalize(space, &mut v, work)?;
            let a = space.linearized(&v, work)?;
            let lambda = dot(&v, &space.apply(&a, &v, work));
            let e = energy(space, &v, lambda, work);
            Ok(Step { alpha, v, a, lambda, e })
        };
        let mut trial = step(settings.damping, work)?;
        let mut rises = 0usize;
        let accepted = loop {
            // minimizer of the quadratic through E(0), E'(0) and E(α)
            let t = trial.alpha;
            let curvature = (trial.e - e - slope * t) / (t * t);
            let model = if curvature > 0.0 { -slope / (2.0 * curvature) } else { t };
            if trial.e - e <= tol_e {
                if model < 0.5 * t && model > 0.0 {
                    let inner = step(model, work)?;
                    if inner.e < trial.e {
                        break inner;
                    }
                }
                break trial;
            }
            rises += 1;
            if rises >= 3 {
                return Err(Error::ScfDiverged {
                    iterations: it,
                    lambda: trial.lambda,
                });
            }
            trial = step(model.clamp(0.1 * t, 0.5 * t), work)?;
        };
        let du = b_norm(space, &sub(&accepted.v, &w), work);
        let dl = accepted.lambda - lambda;
        w = accepted.v;
        a = accepted.a;
        lambda = accepted.lambda;
        e = accepted.e;
        report = ScfReport {
            converged: dl.abs() <= settings.tol_lambda * lambda.abs().max(1.0) && du <= settings.tol_u,
            iterations: it,
            damping: accepted.alpha,
            delta_lambda: dl.abs(),
            delta_u: du,
        };
        if report.converged {
            break;
        }
    }
    Ok(ScfSolution {
        lambda,
        coefficients: w,
        report,
    })
}

/// The full finite element space of one level.
pub struct LevelSpace<'d> {
    disc: &'d Discretization,
    level: usize,
    smoother: SmootherSettings,
    mg: Option<MgContext>,
    dense: Option<DensePencilSolver>,
}

impl<'d> LevelSpace<'d> {
    pub fn new(disc: &'d Discretization, level: usize) -> Result<Self> {
        if level >= disc.n_levels() {
            return Err(Error::InvalidArgument(format!("no level {level}")));
        }
        if disc.n_dofs(level) == 0 {
            return Err(Error::InvalidArgument(format!("level {level} has no interior dofs")));
        }
        Ok(Self {
            disc,
            level,
            smoother: SmootherSettings::default(),
            mg: None,
            dense: None,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }
}

impl ScfSpace for LevelSpace<'_> {
    type Operator = CsrMatrix;

    fn tag(&self) -> SpaceTag {
        SpaceTag::Level(self.level)
    }

    fn dim(&self) -> usize {
        self.disc.n_dofs(self.level)
    }

    fn mass_apply(&self, x: &[f64], work: &mut WorkReport) -> Vec<f64> {
        let m = &self.disc.level(self.level).mass;
        work.add_matvec(m.nnz());
        m.matvec(x)
    }

    fn linear_operator(&self, _work: &mut WorkReport) -> Result<CsrMatrix> {
        Ok(self.disc.level(self.level).linear.clone())
    }

    fn linearized(&self, w: &[f64], work: &mut WorkReport) -> Result<CsrMatrix> {
        self.disc.linearized(self.level, w, work)
    }

    fn apply(&self, a: &CsrMatrix, x: &[f64], work: &mut WorkReport) -> Vec<f64> {
        work.add_matvec(a.nnz());
        a.matvec(x)
    }

    fn linear_form(&self, x: &[f64], work: &mut WorkReport) -> f64 {
        let l = &self.disc.level(self.level).linear;
        work.add_matvec(l.nnz());
        l.quadratic_form(x)
    }

    fn sigma(&self) -> u32 {
        self.disc.spec().sigma()
    }

    fn smallest(&mut self, a: &CsrMatrix, guess: Option<&[f64]>, work: &mut WorkReport) -> Result<(f64, Vec<f64>)> {
        let m = &self.disc.level(self.level).mass;
        let n = a.nrows();
        if n <= DENSE_EIG_LIMIT {
            if self.dense.is_none() {
                self.dense = Some(DensePencilSolver::new(m.to_dense(), work)?);
            }
            let (l, mut x) = self.dense.as_mut().unwrap().smallest(&a.to_dense(), guess, work)?;
            if guess.is_none() {
                apply_sign_convention(&mut x);
            }
            return Ok((l, x));
        }
        if self.mg.is_none() {
            self.mg = Some(self.disc.mg_context(self.level, self.smoother)?);
        }
        let mg = self.mg.as_mut().unwrap();
        let level = self.level;
        let zeros = vec![0.0; n];
        let mut precond = |r: &[f64], work: &mut WorkReport| {
            let before = mg.work();
            let z = mg.v_cycle(level, r, &zeros)?;
            *work += mg.work() - before;
            Ok(z)
        };
        let start: Vec<f64> = match guess {
            Some(g) => g.to_vec(),
            None => self.disc.level(level).dofs.interpolate(self.disc.mesh(level), |x| {
                x.iter().map(|&t| t * (1.0 - t)).product()
            }),
        };
        let (l, mut x) = lobpcg(a, m, &start, EIG_TOL, LOBPCG_MAX_ITER, &mut precond, work)?;
        if guess.is_none() {
            apply_sign_convention(&mut x);
        }
        Ok((l, x))
    }
}

/// Direct SCF solve on level `k`. The result is b-normalized with the sign
/// convention applied.
pub fn solve_level(
    disc: &Discretization,
    k: usize,
    settings: &ScfSettings,
    initial: Option<&FeFunction>,
    work: &mut WorkReport,
) -> Result<(EigenPair, ScfReport)> {
    let mut run = || -> Result<(EigenPair, ScfReport)> {
        let mut space = LevelSpace::new(disc, k)?;
        if let Some(u) = initial {
            if u.level_index() != k {
                return Err(Error::InvalidArgument(format!(
                    "initial guess lives on level {}, not {k}",
                    u.level_index()
                )));
            }
        }
        let sol = scf_solve(&mut space, settings, initial.map(FeFunction::coefficients), work)?;
        let mut c = sol.coefficients;
        apply_sign_convention(&mut c);
        Ok((
            EigenPair {
                lambda: sol.lambda,
                u: FeFunction::new(k, c),
                space_tag: SpaceTag::Level(k),
            },
            sol.report,
        ))
    };
    run().map_err(|e| e.at_level(k))
}

/// Direct SCF solves on levels `first..=last`, each started from the
/// prolongated solution of the level below.
pub fn solve_levels_nested(
    disc: &Discretization,
    first: usize,
    last: usize,
    settings: &ScfSettings,
) -> Result<Vec<(EigenPair, ScfReport)>> {
    let mut out: Vec<(EigenPair, ScfReport)> = Vec::new();
    for k in first..=last {
        let initial = match out.last() {
            Some((prev, _)) => Some(disc.prolongate(&prev.u, k)?),
            None => None,
        };
        out.push(solve_level(disc, k, settings, initial.as_ref(), &mut WorkReport::default())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::ProblemSpec;
    use crate::mesh::build_hierarchy;

    #[test]
    fn linear_problem_converges_in_one_iteration() {
        let disc = Discretization::new(build_hierarchy(2, 8, 1).unwrap(), ProblemSpec::laplace(2).unwrap()).unwrap();
        let (pair, report) = solve_level(&disc, 0, &ScfSettings::default(), None, &mut WorkReport::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        let mass = &disc.level(0).mass;
        assert!((mass.quadratic_form(pair.u.coefficients()) - 1.0).abs() < 1e-12);
        // P1 overestimates 2π² on coarse meshes
        assert!(pair.lambda > 2.0 * std::f64::consts::PI.powi(2));
    }

    #[test]
    fn settings_validation() {
        let bad = ScfSettings {
            damping: 0.0,
            ..ScfSettings::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(ScfSettings::augmented().max_iter, 3);
    }
}
