//! Experiment orchestration: build, solve, measure against a reference.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ReferenceKind, Study};
use super::report::{ErrorReport, ReportRow};
use crate::eigsolve::{solve_level, EigenPair};
use crate::error::{Error, Result};
use crate::fem::{Discretization, FeFunction};
use crate::fmg::{full_multigrid_to, reference_scf_settings, FmgOutcome};
use crate::linalg::vector::dot;
use crate::linalg::WorkReport;
use crate::mesh::{build_hierarchy_with, DEFAULT_MEMORY_BUDGET};
use crate::BETA;

/// Surrogate exact solution on a hierarchy level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub dim: usize,
    /// Boxes per axis of `V_{h_1}` and depth of `V_H` below it; together
    /// with `level_index` they fix the mesh.
    pub divisions_per_axis: usize,
    pub coarse_space_level: usize,
    pub zeta: f64,
    pub level_index: usize,
    pub lambda: f64,
    pub coefficients: Vec<f64>,
}

impl ReferenceSolution {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Config {
            field: "reference.path".into(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).expect("reference serializes");
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn function(&self) -> FeFunction {
        FeFunction::new(self.level_index, self.coefficients.clone())
    }
}

/// Errors of one pair against the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelErrors {
    pub lambda: f64,
    pub a: f64,
    pub l2: f64,
}

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ErrorReport,
    pub discretization: Discretization,
    /// Present for the multigrid studies.
    pub fmg: Option<FmgOutcome>,
    /// Errors of the same-level direct solves (diagnostic studies only).
    pub direct_errors: Vec<Option<LevelErrors>>,
    pub reference: Option<ReferenceSolution>,
}

/// `|λ − λ_ref|`, `‖u − u_ref‖_a`, `‖u − u_ref‖_0` after prolongating `u` to
/// the reference level and aligning signs.
pub fn errors_against(
    disc: &Discretization,
    lambda: f64,
    u: &FeFunction,
    reference: &ReferenceSolution,
) -> Result<LevelErrors> {
    let r = reference.level_index;
    let up = disc.prolongate(u, r)?;
    let ops = disc.level(r);
    if reference.coefficients.len() != ops.dofs.n_dofs() {
        return Err(Error::DimensionMismatch {
            expected: ops.dofs.n_dofs(),
            got: reference.coefficients.len(),
        });
    }
    let mr = ops.mass.matvec(&reference.coefficients);
    let s = if dot(up.coefficients(), &mr) < 0.0 { -1.0 } else { 1.0 };
    let e: Vec<f64> = up
        .coefficients()
        .iter()
        .zip(&reference.coefficients)
        .map(|(a, b)| a - s * b)
        .collect();
    Ok(LevelErrors {
        lambda: (lambda - reference.lambda).abs(),
        a: ops.stiffness.quadratic_form(&e).max(0.0).sqrt(),
        l2: ops.mass.quadratic_form(&e).max(0.0).sqrt(),
    })
}

/// Run a study and return its report.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    run_experiment_detailed(cfg).map(|o| o.report)
}

pub fn run_experiment_detailed(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let spec = cfg.problem_spec()?;
    let file_reference = match cfg.reference.kind {
        ReferenceKind::File => Some(ReferenceSolution::load(cfg.reference.path.as_deref().unwrap())?),
        _ => None,
    };
    let depth = cfg.mesh.coarse_space_level;
    let first = depth;
    let top = first + cfg.mesh.n_levels - 1;
    let extra = match (&cfg.reference.kind, &file_reference) {
        (ReferenceKind::ExtraLevel, _) => cfg.reference.extra_levels,
        (ReferenceKind::File, Some(r)) => {
            if r.dim != cfg.problem.dim
                || r.divisions_per_axis != cfg.mesh.divisions_per_axis
                || r.coarse_space_level != depth
                || r.zeta != cfg.problem.zeta
            {
                return Err(Error::Config {
                    field: "reference.path".into(),
                    message: "reference was computed for a different problem or mesh".into(),
                });
            }
            if r.level_index < top {
                return Err(Error::Config {
                    field: "reference.path".into(),
                    message: format!("reference level {} is coarser than the study", r.level_index),
                });
            }
            r.level_index - top
        }
        _ => 0,
    };
    let hierarchy = build_hierarchy_with(
        cfg.problem.dim,
        cfg.mesh.divisions_per_axis,
        cfg.mesh.n_levels + extra,
        depth,
        cfg.mesh.memory_budget_bytes.unwrap_or(DEFAULT_MEMORY_BUDGET),
    )?;
    let disc = Discretization::new(hierarchy, spec)?;

    // the study itself
    let mut level_pairs: Vec<EigenPair> = Vec::new();
    let mut works: Vec<WorkReport> = Vec::new();
    let mut walls: Vec<f64> = Vec::new();
    let mut varpi: Vec<Option<usize>> = Vec::new();
    let mut gamma: Vec<Option<f64>> = Vec::new();
    let mut fmg = None;
    match cfg.study {
        Study::SingleSolve => {
            for k in first..=top {
                let clock = std::time::Instant::now();
                let mut work = WorkReport::default();
                for j in if k == first { 0..=k } else { k..=k } {
                    work += disc.level(j).setup_work;
                }
                let initial = match level_pairs.last() {
                    Some(prev) => Some(disc.prolongate(&prev.u, k)?),
                    None => None,
                };
                let (pair, _) = solve_level(&disc, k, &cfg.algorithm.scf, initial.as_ref(), &mut work)?;
                level_pairs.push(pair);
                works.push(work);
                walls.push(clock.elapsed().as_secs_f64());
                varpi.push(None);
                gamma.push(None);
            }
        }
        Study::Convergence | Study::Contraction | Study::WorkScaling => {
            let out = full_multigrid_to(&disc, top, &cfg.fmg_params())?;
            for t in &out.traces {
                works.push(t.work);
                walls.push(t.wall_seconds);
                varpi.push(t.records.iter().map(|r| r.varpi).max());
                gamma.push(t.records.iter().filter_map(|r| r.gamma_obs).reduce(f64::max));
            }
            level_pairs = out.level_pairs.clone();
            fmg = Some(out);
        }
    }

    // the reference
    let reference = match cfg.reference.kind {
        ReferenceKind::None => None,
        ReferenceKind::File => file_reference,
        ReferenceKind::ExtraLevel => {
            let settings = reference_scf_settings();
            let mut prev = fmg
                .as_ref()
                .and_then(|f| f.direct[top].clone())
                .unwrap_or_else(|| level_pairs.last().unwrap().clone());
            for k in top + 1..=top + extra {
                let guess = disc.prolongate(&prev.u, k)?;
                prev = solve_level(&disc, k, &settings, Some(&guess), &mut WorkReport::default())?.0;
            }
            let r = ReferenceSolution {
                dim: cfg.problem.dim,
                divisions_per_axis: cfg.mesh.divisions_per_axis,
                coarse_space_level: depth,
                zeta: cfg.problem.zeta,
                level_index: top + extra,
                lambda: prev.lambda,
                coefficients: prev.u.into_coefficients(),
            };
            if let Some(path) = &cfg.reference.path {
                r.save(path)?;
            }
            Some(r)
        }
    };

    let mut report = ErrorReport::default();
    let mut direct_errors = Vec::new();
    for (i, pair) in level_pairs.iter().enumerate() {
        let k = first + i;
        let errs = match &reference {
            Some(r) => Some(errors_against(&disc, pair.lambda, &pair.u, r)?),
            None => None,
        };
        let direct = fmg.as_ref().and_then(|f| f.direct[k].as_ref());
        direct_errors.push(match (&reference, direct) {
            (Some(r), Some(d)) => Some(errors_against(&disc, d.lambda, &d.u, r)?),
            _ => None,
        });
        report.rows.push(ReportRow {
            level: i + 1,
            n_elements: disc.mesh(k).n_cells(),
            n_dofs: disc.n_dofs(k),
            lambda: pair.lambda,
            err_lambda: errs.map(|e| e.lambda),
            err_a: errs.map(|e| e.a),
            err_l2: errs.map(|e| e.l2),
            rate_lambda: None,
            rate_a: None,
            rate_l2: None,
            work_units: works[i].units(),
            wall_seconds: walls[i],
            varpi_max: varpi[i],
            gamma_obs: gamma[i],
        });
    }
    report.fill_rates(BETA);
    Ok(ExperimentOutcome {
        report,
        discretization: disc,
        fmg,
        direct_errors,
        reference,
    })
}
