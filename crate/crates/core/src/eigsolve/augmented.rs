//! The augmented space `V_H + span{ũ}` and its reduced operators.

use nalgebra::DMatrix;

use super::dense::DensePencilSolver;
use super::scf::{ScfSpace, SpaceTag};
use crate::error::{Error, Result};
use crate::fem::{Discretization, FeFunction, Potential};
use crate::linalg::vector::{dot, sub};
use crate::linalg::{CsrMatrix, DenseCholesky, WorkReport};

/// `ũ` counts as lying in `V_H` when its `b`-distance to `V_H` is below this.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Chained prolongation of the coarse space into one fine level, shared by
/// every augmented space built on that level.
#[derive(Debug, Clone)]
pub struct CoarseEmbedding {
    coarse_level: usize,
    fine_level: usize,
    p: CsrMatrix,
    coarse_mass: DenseCholesky,
}

impl CoarseEmbedding {
    pub fn new(disc: &Discretization, coarse_level: usize, fine_level: usize) -> Result<Self> {
        if coarse_level > fine_level || fine_level >= disc.n_levels() {
            return Err(Error::InvalidArgument(format!(
                "coarse level {coarse_level} is not below fine level {fine_level}"
            )));
        }
        Ok(Self {
            coarse_level,
            fine_level,
            p: disc.chained_prolongation(coarse_level, fine_level),
            coarse_mass: DenseCholesky::from_csr(&disc.level(coarse_level).mass)?,
        })
    }

    pub fn coarse_level(&self) -> usize {
        self.coarse_level
    }

    pub fn fine_level(&self) -> usize {
        self.fine_level
    }

    /// `N_k × n_H` interior prolongation.
    pub fn prolongation(&self) -> &CsrMatrix {
        &self.p
    }
}

/// `V_{H,h_k}`: columns of `basis` are the prolongated coarse basis and the
/// b-normalized `ũ` (dropped when `ũ ∈ V_H`).
pub struct AugmentedSpace<'d> {
    disc: &'d Discretization,
    coarse_level: usize,
    fine_level: usize,
    basis: CsrMatrix,
    basis_t: CsrMatrix,
    degenerate: bool,
    projection: Vec<f64>,
    stiffness: DMatrix<f64>,
    mass: DMatrix<f64>,
    potential: DMatrix<f64>,
    solver: Option<DensePencilSolver>,
}

/// Reduced `Bᵀ X B` where `B = [P, ũ]`: the coarse block is the coarse-level
/// matrix (exact by nestedness), the border is `Pᵀ X ũ`, the corner `ũᵀ X ũ`.
fn reduce_bordered(
    coarse: &CsrMatrix,
    fine: &CsrMatrix,
    p: &CsrMatrix,
    u: Option<&[f64]>,
    work: &mut WorkReport,
) -> DMatrix<f64> {
    let nh = coarse.nrows();
    let n = nh + usize::from(u.is_some());
    let mut r = DMatrix::zeros(n, n);
    r.view_mut((0, 0), (nh, nh)).copy_from(&coarse.to_dense());
    if let Some(u) = u {
        let xu = fine.matvec(u);
        let border = p.transpose_matvec(&xu);
        work.add_matvec(fine.nnz() + p.nnz());
        for i in 0..nh {
            r[(i, nh)] = border[i];
            r[(nh, i)] = border[i];
        }
        r[(nh, nh)] = dot(u, &xu);
    }
    work.add_assembly(n * n);
    r
}

/// Build `V_H + span{ũ}` on the fine level of `embedding`.
pub fn build_augmented_space<'d>(
    disc: &'d Discretization,
    embedding: &CoarseEmbedding,
    u_tilde: &FeFunction,
    work: &mut WorkReport,
) -> Result<AugmentedSpace<'d>> {
    let k = embedding.fine_level;
    let h = embedding.coarse_level;
    if u_tilde.level_index() != k || u_tilde.len() != disc.n_dofs(k) {
        return Err(Error::InvalidArgument(format!(
            "ũ must live on level {k} ({} dofs), got level {} with {}",
            disc.n_dofs(k),
            u_tilde.level_index(),
            u_tilde.len()
        )));
    }
    let fine = disc.level(k);
    let p = &embedding.p;
    let nh = p.ncols();

    let mut u = u_tilde.coefficients().to_vec();
    let mu = fine.mass.matvec(&u);
    work.add_matvec(fine.mass.nnz());
    let norm = dot(&u, &mu).sqrt();
    let mut projection = vec![0.0; nh];
    let degenerate = if !(norm > 0.0) {
        true
    } else {
        u.iter_mut().for_each(|v| *v /= norm);
        // b-orthogonal projection onto V_H: M_H c = Pᵀ M ũ
        let rhs: Vec<f64> = p.transpose_matvec(&mu).iter().map(|v| v / norm).collect();
        projection = embedding.coarse_mass.solve(&rhs);
        let resid = sub(&u, &p.matvec(&projection));
        let dist = fine.mass.quadratic_form(&resid).max(0.0).sqrt();
        work.add_matvec(2 * p.nnz() + fine.mass.nnz());
        work.add_dense(embedding.coarse_mass.solve_cost());
        dist < DEGENERATE_TOL
    };

    let basis = if degenerate {
        p.clone()
    } else {
        let mut offsets = Vec::with_capacity(p.nrows() + 1);
        let mut cols = Vec::with_capacity(p.nnz() + p.nrows());
        let mut vals = Vec::with_capacity(p.nnz() + p.nrows());
        offsets.push(0);
        for (i, &ui) in u.iter().enumerate() {
            let (pc, pv) = p.row(i);
            cols.extend_from_slice(pc);
            vals.extend_from_slice(pv);
            cols.push(nh);
            vals.push(ui);
            offsets.push(cols.len());
        }
        CsrMatrix::try_from_parts(p.nrows(), nh + 1, offsets, cols, vals)?
    };
    let ucol = (!degenerate).then_some(u.as_slice());
    let coarse = disc.level(h);
    let stiffness = reduce_bordered(&coarse.stiffness, &fine.stiffness, p, ucol, work);
    let mass = reduce_bordered(&coarse.mass, &fine.mass, p, ucol, work);
    let potential = match disc.spec().potential() {
        Potential::Field(_) => {
            // quadrature of a general field differs between levels
            let bt = basis.transpose();
            let (r, flops) = fine.potential.galerkin_counted(&basis, &bt);
            work.add_assembly(flops);
            r.to_dense()
        }
        _ => reduce_bordered(&coarse.potential, &fine.potential, p, ucol, work),
    };
    Ok(AugmentedSpace {
        disc,
        coarse_level: h,
        fine_level: k,
        basis_t: basis.transpose(),
        basis,
        degenerate,
        projection,
        stiffness,
        mass,
        potential,
        solver: None,
    })
}

impl AugmentedSpace<'_> {
    pub fn fine_level(&self) -> usize {
        self.fine_level
    }

    /// True when `ũ` lay in `V_H` and the span column was dropped.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// `N_k × (n_H + 1)` basis map (`n_H` columns when degenerate).
    pub fn basis(&self) -> &CsrMatrix {
        &self.basis
    }

    pub fn reduced_stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn reduced_mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn reduced_potential(&self) -> &DMatrix<f64> {
        &self.potential
    }

    /// Coefficients representing `ũ` itself (its projection onto `V_H` in
    /// the degenerate case).
    pub fn span_coefficients(&self) -> Vec<f64> {
        if self.degenerate {
            return self.projection.clone();
        }
        let mut c = vec![0.0; self.basis.ncols()];
        *c.last_mut().unwrap() = 1.0;
        c
    }

    /// Fine-level function `B c`.
    pub fn expand(&self, c: &[f64], work: &mut WorkReport) -> FeFunction {
        work.add_matvec(self.basis.nnz());
        FeFunction::new(self.fine_level, self.basis.matvec(c))
    }

    /// Reduced coefficients of the b-orthogonal projection of a fine function.
    pub fn project(&self, u: &FeFunction) -> Result<Vec<f64>> {
        let mu = self.disc.level(self.fine_level).mass.matvec(u.coefficients());
        let rhs = self.basis_t.matvec(&mu);
        let chol = DenseCholesky::new(self.mass.clone())?;
        Ok(chol.solve(&rhs))
    }
}

impl ScfSpace for AugmentedSpace<'_> {
    type Operator = DMatrix<f64>;

    fn tag(&self) -> SpaceTag {
        SpaceTag::Augmented {
            coarse_level: self.coarse_level,
            fine_level: self.fine_level,
        }
    }

    fn dim(&self) -> usize {
        self.basis.ncols()
    }

    fn mass_apply(&self, x: &[f64], work: &mut WorkReport) -> Vec<f64> {
        work.add_dense(x.len() * x.len());
        (&self.mass * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec()
    }

    fn linear_operator(&self, _work: &mut WorkReport) -> Result<DMatrix<f64>> {
        Ok(&self.stiffness + &self.potential)
    }

    fn linearized(&self, c: &[f64], work: &mut WorkReport) -> Result<DMatrix<f64>> {
        let mut a = &self.stiffness + &self.potential;
        if !self.disc.spec().is_linear() {
            let w = self.expand(c, work);
            let n = self.disc.nonlinear_matrix(self.fine_level, w.coefficients(), work)?;
            let (r, flops) = n.galerkin_counted(&self.basis, &self.basis_t);
            work.add_assembly(flops);
            a += r.to_dense();
        }
        Ok(a)
    }

    fn apply(&self, a: &DMatrix<f64>, x: &[f64], work: &mut WorkReport) -> Vec<f64> {
        work.add_dense(x.len() * x.len());
        (a * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec()
    }

    fn linear_form(&self, x: &[f64], work: &mut WorkReport) -> f64 {
        work.add_dense(2 * x.len() * x.len());
        let x = nalgebra::DVector::from_column_slice(x);
        x.dot(&(&self.stiffness * &x)) + x.dot(&(&self.potential * &x))
    }

    fn sigma(&self) -> u32 {
        self.disc.spec().sigma()
    }

    fn smallest(&mut self, a: &DMatrix<f64>, guess: Option<&[f64]>, work: &mut WorkReport) -> Result<(f64, Vec<f64>)> {
        if self.solver.is_none() {
            self.solver = Some(DensePencilSolver::new(self.mass.clone(), work)?);
        }
        self.solver.as_mut().unwrap().smallest(a, guess, work)
    }
}
