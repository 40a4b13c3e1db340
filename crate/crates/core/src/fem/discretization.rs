//! Assembled operators for every level of a mesh hierarchy.

use super::assembly::{assemble_mass, assemble_stiffness, assemble_weighted_mass, DofMap, Weight};
use super::function::FeFunction;
use super::problem::ProblemSpec;
use super::quadrature::rule_for;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, MgContext, SmootherSettings, WorkReport};
use crate::mesh::{interior_prolongation, MeshHierarchy, MeshLevel};

/// Interior-dof operators of one level.
#[derive(Debug, Clone)]
pub struct LevelOperators {
    pub dofs: DofMap,
    /// `Â`
    pub stiffness: CsrMatrix,
    /// `M`
    pub mass: CsrMatrix,
    /// `M_W`
    pub potential: CsrMatrix,
    /// `Â + M_W`
    pub linear: CsrMatrix,
    /// Work spent assembling the above.
    pub setup_work: WorkReport,
}

/// A problem discretized on every level of a hierarchy. Level indices are
/// hierarchy indices (0 is the coarse space `V_H`).
#[derive(Debug, Clone)]
pub struct Discretization {
    hierarchy: MeshHierarchy,
    spec: ProblemSpec,
    levels: Vec<LevelOperators>,
    /// `prolongations[k]` maps interior dofs of level `k` to level `k + 1`.
    prolongations: Vec<CsrMatrix>,
}

impl Discretization {
    pub fn new(hierarchy: MeshHierarchy, spec: ProblemSpec) -> Result<Self> {
        if hierarchy.dim() != spec.dim() {
            return Err(Error::InvalidArgument(format!(
                "mesh dimension {} but problem dimension {}",
                hierarchy.dim(),
                spec.dim()
            )));
        }
        if !spec.is_linear() {
            rule_for(spec.dim(), spec.nonlinear_integrand_degree())?;
        }
        let mut disc = Self {
            hierarchy,
            spec,
            levels: Vec::new(),
            prolongations: Vec::new(),
        };
        for k in 0..disc.hierarchy.n_levels() {
            disc.assemble_level(k)?;
        }
        Ok(disc)
    }

    fn assemble_level(&mut self, k: usize) -> Result<()> {
        let mesh = self.hierarchy.level(k);
        let build = || -> Result<LevelOperators> {
            let dofs = DofMap::interior(mesh);
            let stiffness = assemble_stiffness(mesh, &dofs, &self.spec)?;
            let mass = assemble_mass(mesh, &dofs)?;
            let potential = if self.spec.potential().is_zero() {
                mass.zeros_like()
            } else {
                assemble_weighted_mass(mesh, &dofs, Weight::Field(self.spec.potential()), 1)?
            };
            let linear = stiffness.add_scaled_same_pattern(1.0, &potential)?;
            let mut setup_work = WorkReport::default();
            for m in [&stiffness, &mass, &potential] {
                setup_work.add_assembly(m.nnz());
            }
            Ok(LevelOperators {
                dofs,
                stiffness,
                mass,
                potential,
                linear,
                setup_work,
            })
        };
        let ops = build().map_err(|e| e.at_level(k))?;
        if k > 0 {
            let p = interior_prolongation(self.hierarchy.level(k - 1), mesh).map_err(|e| e.at_level(k))?;
            self.prolongations.push(p);
        }
        self.levels.push(ops);
        Ok(())
    }

    /// Refine the finest level once more and assemble it.
    pub fn push_level(&mut self) -> Result<()> {
        self.hierarchy.push_refinement()?;
        self.assemble_level(self.hierarchy.n_levels() - 1)
    }

    pub fn hierarchy(&self) -> &MeshHierarchy {
        &self.hierarchy
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn finest(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn mesh(&self, k: usize) -> &MeshLevel {
        self.hierarchy.level(k)
    }

    pub fn level(&self, k: usize) -> &LevelOperators {
        &self.levels[k]
    }

    pub fn n_dofs(&self, k: usize) -> usize {
        self.levels[k].dofs.n_dofs()
    }

    /// Interior prolongation from level `k` to `k + 1`.
    pub fn prolongation(&self, k: usize) -> &CsrMatrix {
        &self.prolongations[k]
    }

    /// Interior prolongation from level `from` to level `to ≥ from`.
    pub fn chained_prolongation(&self, from: usize, to: usize) -> CsrMatrix {
        assert!(from <= to && to < self.n_levels());
        let mut p = CsrMatrix::identity(self.n_dofs(from));
        for k in from..to {
            p = self.prolongations[k].matmul(&p);
        }
        p
    }

    /// Coefficients of `u` (level `from`) on level `to`.
    pub fn prolongate(&self, u: &FeFunction, to: usize) -> Result<FeFunction> {
        let from = u.level_index();
        if from > to || to >= self.n_levels() {
            return Err(Error::InvalidArgument(format!("cannot prolongate level {from} to level {to}")));
        }
        if u.len() != self.n_dofs(from) {
            return Err(Error::DimensionMismatch {
                expected: self.n_dofs(from),
                got: u.len(),
            });
        }
        let mut c = u.coefficients().to_vec();
        for k in from..to {
            c = self.prolongations[k].matvec(&c);
        }
        Ok(FeFunction::new(to, c))
    }

    /// `ζ M_{w^{2σ}}` on level `k` for coefficients `w` (zero when ζ = 0).
    pub fn nonlinear_matrix(&self, k: usize, w: &[f64], work: &mut WorkReport) -> Result<CsrMatrix> {
        let ops = &self.levels[k];
        if self.spec.is_linear() {
            return Ok(ops.mass.zeros_like());
        }
        let u = FeFunction::new(k, w.to_vec());
        let m = assemble_weighted_mass(self.mesh(k), &ops.dofs, Weight::Function(&u), 2 * self.spec.sigma())?;
        work.add_assembly(m.nnz());
        Ok(m.scaled(self.spec.zeta()))
    }

    /// `A_lin(w) = Â + M_W + ζ M_{w^{2σ}}` on level `k`.
    pub fn linearized(&self, k: usize, w: &[f64], work: &mut WorkReport) -> Result<CsrMatrix> {
        let n = self.nonlinear_matrix(k, w, work)?;
        self.levels[k].linear.add_scaled_same_pattern(1.0, &n)
    }

    /// Dual residual `a(u, φ_i) - λ b(u, φ_i)` from the cached operators.
    pub fn residual(&self, u: &FeFunction, lambda: f64) -> Result<Vec<f64>> {
        let k = u.level_index();
        let a = self.linearized(k, u.coefficients(), &mut WorkReport::default())?;
        let mut r = a.matvec(u.coefficients());
        let mu = self.levels[k].mass.matvec(u.coefficients());
        for (ri, mi) in r.iter_mut().zip(mu) {
            *ri -= lambda * mi;
        }
        Ok(r)
    }

    /// Multigrid context for `Â` on levels `0..=top`.
    pub fn mg_context(&self, top: usize, smoother: SmootherSettings) -> Result<MgContext> {
        let matrices = (0..=top).map(|k| self.levels[k].stiffness.clone()).collect();
        let prolongations = self.prolongations[..top].to_vec();
        MgContext::new(matrices, prolongations, smoother)
    }
}

/// Dual residual `v ↦ a(u, v) - λ b(u, v)` assembled from scratch on `mesh`.
pub fn apply_nonlinear_residual(mesh: &MeshLevel, spec: &ProblemSpec, u: &FeFunction, lambda: f64) -> Result<Vec<f64>> {
    let dofs = DofMap::interior(mesh);
    if u.len() != dofs.n_dofs() {
        return Err(Error::DimensionMismatch {
            expected: dofs.n_dofs(),
            got: u.len(),
        });
    }
    let c = u.coefficients();
    let mut r = assemble_stiffness(mesh, &dofs, spec)?.matvec(c);
    let mass = assemble_mass(mesh, &dofs)?.matvec(c);
    let add = |r: &mut Vec<f64>, v: Vec<f64>, s: f64| r.iter_mut().zip(v).for_each(|(a, b)| *a += s * b);
    if !spec.potential().is_zero() {
        let w = assemble_weighted_mass(mesh, &dofs, Weight::Field(spec.potential()), 1)?;
        add(&mut r, w.matvec(c), 1.0);
    }
    if !spec.is_linear() {
        let n = assemble_weighted_mass(mesh, &dofs, Weight::Function(u), 2 * spec.sigma())?;
        add(&mut r, n.matvec(c), spec.zeta());
    }
    add(&mut r, mass, -lambda);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Potential;
    use crate::mesh::build_hierarchy;

    #[test]
    fn residual_of_zero_is_zero() {
        let h = build_hierarchy(2, 4, 1).unwrap();
        let spec = ProblemSpec::gross_pitaevskii(2, 1.0).unwrap();
        let u = FeFunction::zeros(0, h.level(0).n_interior());
        let r = apply_nonlinear_residual(h.level(0), &spec, &u, 3.7).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_residual_matches_operators() {
        let h = build_hierarchy(2, 4, 2).unwrap();
        let spec = ProblemSpec::new(2, Potential::Harmonic, 0.0, 1).unwrap();
        let disc = Discretization::new(h, spec.clone()).unwrap();
        let n = disc.n_dofs(1);
        let u = FeFunction::new(1, (0..n).map(|i| (i as f64 * 0.37).sin()).collect());
        let lambda = 12.5;
        let r = apply_nonlinear_residual(disc.mesh(1), &spec, &u, lambda).unwrap();
        let ops = disc.level(1);
        let mut expect = ops.linear.matvec(u.coefficients());
        for (e, m) in expect.iter_mut().zip(ops.mass.matvec(u.coefficients())) {
            *e -= lambda * m;
        }
        for (a, b) in r.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-13);
        }
        let cached = disc.residual(&u, lambda).unwrap();
        for (a, b) in cached.iter().zip(&r) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn chained_prolongation_matches_stepwise() {
        let disc = Discretization::new(build_hierarchy(2, 2, 3).unwrap(), ProblemSpec::laplace(2).unwrap()).unwrap();
        let p = disc.chained_prolongation(0, 2);
        let u = FeFunction::new(0, vec![1.0]);
        let stepwise = disc.prolongate(&u, 2).unwrap();
        assert_eq!(p.matvec(u.coefficients()), stepwise.coefficients());
    }
}
