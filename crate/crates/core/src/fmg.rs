//! One correction step and the full multigrid scheme.
//!
//! A correction on level `k` takes `(λ, u)`, runs `m` V-cycles on
//! `Â ũ = λ M u − M_W u − ζ M_{u^{2σ}} u` starting from `u`, and then solves
//! the nonlinear eigenproblem on `V_H + span{ũ}` by a few SCF steps.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::eigsolve::{
    build_augmented_space, scf_solve, solve_level, CoarseEmbedding, EigenPair, ScfReport, ScfSettings, SpaceTag,
};
use crate::error::{Error, Result};
use crate::fem::{Discretization, FeFunction};
use crate::linalg::vector::{apply_sign_convention, dot, scale};
use crate::linalg::{MgContext, SmootherSettings, WorkReport};

/// Algorithm knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmgParams {
    /// V-cycles per correction.
    pub m: usize,
    /// Corrections per level.
    pub p: usize,
    pub smoother: SmootherSettings,
    /// SCF on `V_{h_1}`.
    pub scf: ScfSettings,
    /// SCF on the augmented spaces.
    pub augmented_scf: ScfSettings,
    /// Solve every level directly as well and record error contraction.
    pub record_diagnostics: bool,
}

impl Default for FmgParams {
    fn default() -> Self {
        Self {
            m: 1,
            p: 1,
            smoother: SmootherSettings::default(),
            scf: ScfSettings::default(),
            augmented_scf: ScfSettings::augmented(),
            record_diagnostics: false,
        }
    }
}

impl FmgParams {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.p == 0 {
            return Err(Error::InvalidArgument(format!(
                "m and p must be >= 1 (m = {}, p = {})",
                self.m, self.p
            )));
        }
        self.scf.validate()?;
        self.augmented_scf.validate()
    }
}

/// Settings of the direct solves used as same-level references.
pub fn reference_scf_settings() -> ScfSettings {
    ScfSettings {
        tol_lambda: 1e-12,
        tol_u: 1e-10,
        max_iter: 500,
        damping: 1.0,
    }
}

/// One correction on one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRecord {
    pub lambda_before: f64,
    pub lambda_after: f64,
    /// Errors against the same level's direct solution (diagnostics only).
    pub err_a_before: Option<f64>,
    pub err_a_after: Option<f64>,
    pub err_l2_before: Option<f64>,
    pub err_l2_after: Option<f64>,
    /// `err_a_after / err_a_before`.
    pub gamma_obs: Option<f64>,
    /// SCF iterations on the augmented space.
    pub varpi: usize,
    pub scf_converged: bool,
    pub degenerate: bool,
    pub work_units: u64,
}

/// Everything that happened on one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTrace {
    pub level_index: usize,
    pub n_dofs: usize,
    pub lambda: f64,
    pub records: Vec<CorrectionRecord>,
    /// Work charged to this level, setup assembly included.
    pub work: WorkReport,
    pub wall_seconds: f64,
    /// SCF report of the direct solve on `V_{h_1}` (first level only).
    pub scf: Option<ScfReport>,
}

#[derive(Debug, Clone)]
pub struct FmgOutcome {
    pub pair: EigenPair,
    /// Iterates on `V_{h_1} … V_{h_n}`.
    pub level_pairs: Vec<EigenPair>,
    pub traces: Vec<LevelTrace>,
    /// Direct solutions per level when diagnostics were recorded.
    pub direct: Vec<Option<EigenPair>>,
}

impl FmgOutcome {
    pub fn total_work(&self) -> WorkReport {
        self.traces.iter().fold(WorkReport::default(), |acc, t| acc + t.work)
    }
}

/// Data of one correction beyond the new pair.
#[derive(Debug, Clone, Copy)]
pub struct CorrectionInfo {
    pub varpi: usize,
    pub converged: bool,
    pub degenerate: bool,
}

fn normalized(disc: &Discretization, mut u: FeFunction, work: &mut WorkReport) -> FeFunction {
    let m = &disc.level(u.level_index()).mass;
    work.add_matvec(m.nnz());
    let n = m.quadratic_form(u.coefficients()).sqrt();
    scale(1.0 / n, u.coefficients_mut());
    apply_sign_convention(u.coefficients_mut());
    u
}

/// Algorithm 1 on level `k = state.u.level_index()`.
pub fn one_correction_step(
    disc: &Discretization,
    state: &EigenPair,
    mg: &mut MgContext,
    embedding: &CoarseEmbedding,
    params: &FmgParams,
    work: &mut WorkReport,
) -> Result<(EigenPair, CorrectionInfo)> {
    let k = state.u.level_index();
    if embedding.fine_level() != k || state.u.len() != disc.n_dofs(k) {
        return Err(Error::InvalidArgument(format!(
            "state on level {k} does not match the embedding into level {}",
            embedding.fine_level()
        ))
        .at_level(k));
    }
    let mut run = |work: &mut WorkReport| -> Result<(EigenPair, CorrectionInfo)> {
        let ops = disc.level(k);
        let u = state.u.coefficients();

        // right-hand side λ M u − M_W u − ζ M_{u^{2σ}} u
        let nonlinear = disc.nonlinear_matrix(k, u, work)?;
        let mut rhs = ops.mass.matvec(u);
        scale(state.lambda, &mut rhs);
        for m in [&ops.potential, &nonlinear] {
            let v = m.matvec(u);
            rhs.iter_mut().zip(v).for_each(|(r, x)| *r -= x);
        }
        work.add_matvec(ops.mass.nnz() + ops.potential.nnz() + nonlinear.nnz());

        let before = mg.work();
        let u_tilde = mg.mg_solve(k, &rhs, u, params.m)?;
        *work += mg.work() - before;

        let u_tilde = FeFunction::new(k, u_tilde);
        let mut space = build_augmented_space(disc, embedding, &u_tilde, work)?;
        let initial = space.span_coefficients();
        let sol = scf_solve(&mut space, &params.augmented_scf, Some(&initial), work)?;
        let u_new = normalized(disc, space.expand(&sol.coefficients, work), work);
        Ok((
            EigenPair {
                lambda: sol.lambda,
                u: u_new,
                space_tag: SpaceTag::Level(k),
            },
            CorrectionInfo {
                varpi: sol.report.iterations,
                converged: sol.report.converged,
                degenerate: space.is_degenerate(),
            },
        ))
    };
    run(work).map_err(|e| e.at_level(k))
}

/// a- and b-norm distances between `u` and `reference` on the same level,
/// after aligning signs.
pub fn same_level_errors(disc: &Discretization, u: &FeFunction, reference: &FeFunction) -> (f64, f64) {
    let ops = disc.level(u.level_index());
    let mr = ops.mass.matvec(reference.coefficients());
    let s = if dot(u.coefficients(), &mr) < 0.0 { -1.0 } else { 1.0 };
    let e: Vec<f64> = u
        .coefficients()
        .iter()
        .zip(reference.coefficients())
        .map(|(a, b)| a - s * b)
        .collect();
    (
        ops.stiffness.quadratic_form(&e).max(0.0).sqrt(),
        ops.mass.quadratic_form(&e).max(0.0).sqrt(),
    )
}

/// Algorithm 2 up to the finest level of `disc`.
pub fn full_multigrid(disc: &Discretization, params: &FmgParams) -> Result<FmgOutcome> {
    full_multigrid_to(disc, disc.finest(), params)
}

/// Algorithm 2 on `V_{h_1} … V_{top}`; levels of `disc` above `top` (such
/// as reference levels) are ignored.
pub fn full_multigrid_to(disc: &Discretization, top: usize, params: &FmgParams) -> Result<FmgOutcome> {
    params.validate()?;
    let first = disc.hierarchy().first_level();
    if top < first || top >= disc.n_levels() {
        return Err(Error::InvalidArgument(format!(
            "top level {top} outside {first}..{}",
            disc.n_levels()
        )));
    }
    let reference = reference_scf_settings();

    // step 1: the nonlinear problem on V_{h_1}
    let clock = Instant::now();
    let mut work = WorkReport::default();
    for k in 0..=first {
        work += disc.level(k).setup_work;
    }
    let mut mg = disc.mg_context(top, params.smoother)?;
    let nh = disc.n_dofs(0);
    work.add_dense(nh * nh * nh / 3);
    let (pair, scf_report) = solve_level(disc, first, &params.scf, None, &mut work)?;
    let mut traces = vec![LevelTrace {
        level_index: first,
        n_dofs: disc.n_dofs(first),
        lambda: pair.lambda,
        records: Vec::new(),
        work,
        wall_seconds: clock.elapsed().as_secs_f64(),
        scf: Some(scf_report),
    }];
    let mut direct: Vec<Option<EigenPair>> = vec![None; top + 1];
    if params.record_diagnostics {
        direct[first] = Some(pair.clone());
    }
    let mut level_pairs = vec![pair];

    // step 2: prolongate and correct
    for k in first + 1..=top {
        let clock = Instant::now();
        let mut diagnostics_seconds = 0.0;
        let mut work = disc.level(k).setup_work;
        let embedding = CoarseEmbedding::new(disc, 0, k).map_err(|e| e.at_level(k))?;
        work.add_assembly(embedding.prolongation().nnz());

        let prev = level_pairs.last().unwrap();
        work.add_matvec(disc.prolongation(k - 1).nnz());
        let mut state = EigenPair {
            lambda: prev.lambda,
            u: disc.prolongate(&prev.u, k)?,
            space_tag: SpaceTag::Level(k),
        };
        if params.record_diagnostics {
            let diag_clock = Instant::now();
            let guess = match &direct[k - 1] {
                Some(d) => disc.prolongate(&d.u, k)?,
                None => state.u.clone(),
            };
            let (d, _) = solve_level(disc, k, &reference, Some(&guess), &mut WorkReport::default())?;
            direct[k] = Some(d);
            diagnostics_seconds += diag_clock.elapsed().as_secs_f64();
        }

        let mut records = Vec::with_capacity(params.p);
        for _ in 0..params.p {
            let start = work;
            let (next, info) = one_correction_step(disc, &state, &mut mg, &embedding, params, &mut work)?;
            let diag_clock = Instant::now();
            let (mut ea0, mut ea1, mut eb0, mut eb1, mut gamma) = (None, None, None, None, None);
            if let Some(d) = &direct[k] {
                let (a0, b0) = same_level_errors(disc, &state.u, &d.u);
                let (a1, b1) = same_level_errors(disc, &next.u, &d.u);
                (ea0, ea1, eb0, eb1) = (Some(a0), Some(a1), Some(b0), Some(b1));
                gamma = (a0 > 0.0).then(|| a1 / a0);
            }
            diagnostics_seconds += diag_clock.elapsed().as_secs_f64();
            records.push(CorrectionRecord {
                lambda_before: state.lambda,
                lambda_after: next.lambda,
                err_a_before: ea0,
                err_a_after: ea1,
                err_l2_before: eb0,
                err_l2_after: eb1,
                gamma_obs: gamma,
                varpi: info.varpi,
                scf_converged: info.converged,
                degenerate: info.degenerate,
                work_units: (work - start).units(),
            });
            state = next;
        }
        traces.push(LevelTrace {
            level_index: k,
            n_dofs: disc.n_dofs(k),
            lambda: state.lambda,
            records,
            work,
            wall_seconds: clock.elapsed().as_secs_f64() - diagnostics_seconds,
            scf: None,
        });
        level_pairs.push(state);
    }
    Ok(FmgOutcome {
        pair: level_pairs.last().unwrap().clone(),
        level_pairs,
        traces,
        direct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::ProblemSpec;
    use crate::mesh::build_hierarchy;

    #[test]
    fn single_level_is_the_direct_solve() {
        let disc = Discretization::new(
            build_hierarchy(2, 4, 1).unwrap(),
            ProblemSpec::gross_pitaevskii(2, 1.0).unwrap(),
        )
        .unwrap();
        let out = full_multigrid(&disc, &FmgParams::default()).unwrap();
        let (direct, _) = solve_level(&disc, 0, &ScfSettings::default(), None, &mut WorkReport::default()).unwrap();
        assert_eq!(out.pair, direct);
        assert_eq!(out.traces.len(), 1);
    }

    #[test]
    fn rejects_zero_cycles() {
        let params = FmgParams {
            m: 0,
            ..FmgParams::default()
        };
        assert!(params.validate().is_err());
    }
}
