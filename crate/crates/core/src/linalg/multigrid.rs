//! Geometric multigrid V-cycles with conjugate gradient smoothing.

use serde::{Deserialize, Serialize};

use super::csr::CsrMatrix;
use super::direct::{direct_solve_counted, DenseCholesky, DENSE_DIRECT_LIMIT};
use super::krylov::cg_smooth;
use super::vector::axpy;
use super::work::WorkReport;
use crate::error::{Error, Result};

/// Smoothing configuration for the V-cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmootherSettings {
    pub pre_steps: usize,
    pub post_steps: usize,
}

impl Default for SmootherSettings {
    fn default() -> Self {
        Self {
            pre_steps: 3,
            post_steps: 3,
        }
    }
}

enum CoarseSolver {
    Dense(DenseCholesky),
    Iterative,
}

/// Level matrices, transfer operators and a work counter for one multigrid
/// hierarchy. Level 0 is the coarsest. The context is mutated by every
/// solve (work counter) and so is owned by one solve at a time.
pub struct MgContext {
    matrices: Vec<CsrMatrix>,
    /// `prolongations[k]` maps level `k` to level `k + 1`.
    prolongations: Vec<CsrMatrix>,
    restrictions: Vec<CsrMatrix>,
    coarse: CoarseSolver,
    smoother: SmootherSettings,
    work: WorkReport,
    smoother_breakdowns: usize,
}

impl MgContext {
    /// Build from per-level matrices (coarsest first) and the prolongations
    /// between consecutive levels.
    pub fn new(
        matrices: Vec<CsrMatrix>,
        prolongations: Vec<CsrMatrix>,
        smoother: SmootherSettings,
    ) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidArgument("multigrid needs at least one level".into()));
        }
        if prolongations.len() + 1 != matrices.len() {
            return Err(Error::InvalidArgument(format!(
                "{} levels need {} prolongations, got {}",
                matrices.len(),
                matrices.len() - 1,
                prolongations.len()
            )));
        }
        for (k, p) in prolongations.iter().enumerate() {
            if p.ncols() != matrices[k].nrows() || p.nrows() != matrices[k + 1].nrows() {
                return Err(Error::DimensionMismatch {
                    expected: matrices[k + 1].nrows(),
                    got: p.nrows(),
                });
            }
        }
        let coarse = if matrices[0].nrows() <= DENSE_DIRECT_LIMIT {
            CoarseSolver::Dense(DenseCholesky::from_csr(&matrices[0])?)
        } else {
            CoarseSolver::Iterative
        };
        let restrictions = prolongations.iter().map(CsrMatrix::transpose).collect();
        Ok(Self {
            matrices,
            prolongations,
            restrictions,
            coarse,
            smoother,
            work: WorkReport::default(),
            smoother_breakdowns: 0,
        })
    }

    /// Build a hierarchy for `fine` by repeated variational coarsening
    /// `A_k = P_kᵀ A_{k+1} P_k`.
    pub fn galerkin(
        fine: CsrMatrix,
        prolongations: Vec<CsrMatrix>,
        smoother: SmootherSettings,
    ) -> Result<Self> {
        let mut matrices = vec![fine];
        for p in prolongations.iter().rev() {
            let coarse = matrices.last().unwrap().galerkin(p);
            matrices.push(coarse);
        }
        matrices.reverse();
        Self::new(matrices, prolongations, smoother)
    }

    pub fn n_levels(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrix(&self, level: usize) -> &CsrMatrix {
        &self.matrices[level]
    }

    pub fn prolongation(&self, level: usize) -> &CsrMatrix {
        &self.prolongations[level]
    }

    pub fn smoother(&self) -> SmootherSettings {
        self.smoother
    }

    pub fn work(&self) -> WorkReport {
        self.work
    }

    /// Work counter, for callers that account their own kernels against it.
    pub fn work_mut(&mut self) -> &mut WorkReport {
        &mut self.work
    }

    /// Number of smoothing phases that stopped on a CG breakdown.
    pub fn smoother_breakdowns(&self) -> usize {
        self.smoother_breakdowns
    }

    fn check_level(&self, level: usize, b: &[f64], x0: &[f64]) -> Result<()> {
        if level >= self.matrices.len() {
            return Err(Error::InvalidArgument(format!(
                "level {level} outside a {}-level hierarchy",
                self.matrices.len()
            )));
        }
        let n = self.matrices[level].nrows();
        for len in [b.len(), x0.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        Ok(())
    }

    /// Exact solve on the coarsest level.
    pub fn coarse_solve(&mut self, b: &[f64]) -> Result<Vec<f64>> {
        self.work.coarse_solves += 1;
        match &self.coarse {
            CoarseSolver::Dense(chol) => {
                self.work.add_dense(chol.solve_cost());
                Ok(chol.solve(b))
            }
            CoarseSolver::Iterative => direct_solve_counted(&self.matrices[0], b, &mut self.work),
        }
    }

    /// One V-cycle for `A_level x = b` starting from `x0`.
    pub fn v_cycle(&mut self, level: usize, b: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
        self.check_level(level, b, x0)?;
        self.v_cycle_unchecked(level, b, x0)
    }

    fn v_cycle_unchecked(&mut self, level: usize, b: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
        if level == 0 {
            return self.coarse_solve(b);
        }
        let SmootherSettings {
            pre_steps,
            post_steps,
        } = self.smoother;

        let pre = cg_smooth(&self.matrices[level], b, x0, pre_steps, &mut self.work);
        self.smoother_breakdowns += usize::from(pre.breakdown);
        let mut x = pre.x;

        let a = &self.matrices[level];
        let mut r = a.matvec(&x);
        self.work.add_matvec(a.nnz());
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let rc = self.restrictions[level - 1].matvec(&r);
        self.work.add_matvec(self.restrictions[level - 1].nnz());

        let zero = vec![0.0; rc.len()];
        let ec = self.v_cycle_unchecked(level - 1, &rc, &zero)?;
        let e = self.prolongations[level - 1].matvec(&ec);
        self.work.add_matvec(self.prolongations[level - 1].nnz());
        axpy(1.0, &e, &mut x);

        let post = cg_smooth(&self.matrices[level], b, &x, post_steps, &mut self.work);
        self.smoother_breakdowns += usize::from(post.breakdown);
        Ok(post.x)
    }

    /// `m` V-cycles from `x0`.
    pub fn mg_solve(&mut self, level: usize, rhs: &[f64], x0: &[f64], m: usize) -> Result<Vec<f64>> {
        if m == 0 {
            return Err(Error::InvalidArgument("mg_solve needs m >= 1".into()));
        }
        self.check_level(level, rhs, x0)?;
        let mut x = x0.to_vec();
        for _ in 0..m {
            x = self.v_cycle_unchecked(level, rhs, &x)?;
        }
        Ok(x)
    }
}
