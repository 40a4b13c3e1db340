//! Experiment configuration (JSON, every field optional).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eigsolve::ScfSettings;
use crate::error::{Error, Result};
use crate::fem::{Potential, ProblemSpec};
use crate::fmg::FmgParams;
use crate::linalg::SmootherSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    None,
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    Convergence,
    Contraction,
    WorkScaling,
    SingleSolve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// Direct solve on extra refinements of the finest level.
    ExtraLevel,
    /// A previously saved reference solution.
    File,
    /// No reference; error columns stay empty.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub dim: usize,
    pub zeta: f64,
    pub sigma: u32,
    pub potential: PotentialKind,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            zeta: 1.0,
            sigma: 1,
            potential: PotentialKind::Harmonic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    /// Boxes per axis of `V_{h_1}`.
    pub divisions_per_axis: usize,
    /// Levels `V_{h_1} … V_{h_n}`.
    pub n_levels: usize,
    /// Refinements between `V_H` and `V_{h_1}` (0: `V_H = V_{h_1}`).
    pub coarse_space_level: usize,
    pub memory_budget_bytes: Option<usize>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            divisions_per_axis: 8,
            n_levels: 5,
            coarse_space_level: 0,
            memory_budget_bytes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub m: usize,
    pub p: usize,
    pub pre_smoothing: usize,
    pub post_smoothing: usize,
    pub scf: ScfSettings,
    pub augmented_scf: ScfSettings,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self {
            m: 1,
            p: 1,
            pre_smoothing: 3,
            post_smoothing: 3,
            scf: ScfSettings::default(),
            augmented_scf: ScfSettings::augmented(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub kind: ReferenceKind,
    /// Refinements beyond the finest study level (extra-level only).
    pub extra_levels: usize,
    /// Reference file to read (`file`) or to write after an extra-level solve.
    pub path: Option<PathBuf>,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            kind: ReferenceKind::ExtraLevel,
            extra_levels: 1,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            path: None,
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub study: Study,
    pub problem: ProblemConfig,
    pub mesh: MeshConfig,
    pub algorithm: AlgorithmConfig,
    pub reference: ReferenceConfig,
    pub output: OutputConfig,
    /// Seed for randomized diagnostics.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            study: Study::Convergence,
            problem: ProblemConfig::default(),
            mesh: MeshConfig::default(),
            algorithm: AlgorithmConfig::default(),
            reference: ReferenceConfig::default(),
            output: OutputConfig::default(),
            seed: 0,
        }
    }
}

fn config_error(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_error("<document>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if p.dim != 2 && p.dim != 3 {
            return Err(config_error("problem.dim", format!("must be 2 or 3, got {}", p.dim)));
        }
        if !(p.zeta >= 0.0 && p.zeta.is_finite()) {
            return Err(config_error("problem.zeta", format!("must be finite and >= 0, got {}", p.zeta)));
        }
        if p.sigma == 0 {
            return Err(config_error("problem.sigma", "must be >= 1"));
        }
        let m = &self.mesh;
        if m.n_levels == 0 {
            return Err(config_error("mesh.n_levels", "must be >= 1"));
        }
        if m.divisions_per_axis == 0 || m.divisions_per_axis % (1 << m.coarse_space_level) != 0 {
            return Err(config_error(
                "mesh.divisions_per_axis",
                format!("must be a positive multiple of 2^{}", m.coarse_space_level),
            ));
        }
        let a = &self.algorithm;
        if a.m == 0 {
            return Err(config_error("algorithm.m", "must be >= 1"));
        }
        if a.p == 0 {
            return Err(config_error("algorithm.p", "must be >= 1"));
        }
        a.scf
            .validate()
            .map_err(|e| config_error("algorithm.scf", e.to_string()))?;
        a.augmented_scf
            .validate()
            .map_err(|e| config_error("algorithm.augmented_scf", e.to_string()))?;
        match self.reference.kind {
            ReferenceKind::ExtraLevel if self.reference.extra_levels == 0 => {
                return Err(config_error("reference.extra_levels", "must be >= 1"));
            }
            ReferenceKind::File if self.reference.path.is_none() => {
                return Err(config_error("reference.path", "required for a file reference"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        let potential = match self.problem.potential {
            PotentialKind::None => Potential::Zero,
            PotentialKind::Harmonic => Potential::Harmonic,
        };
        ProblemSpec::new(self.problem.dim, potential, self.problem.zeta, self.problem.sigma)
    }

    pub fn fmg_params(&self) -> FmgParams {
        let a = &self.algorithm;
        FmgParams {
            m: a.m,
            p: a.p,
            smoother: SmootherSettings {
                pre_steps: a.pre_smoothing,
                post_steps: a.post_smoothing,
            },
            scf: a.scf,
            augmented_scf: a.augmented_scf,
            record_diagnostics: matches!(self.study, Study::Convergence | Study::Contraction),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_is_the_study_name() {
        let cfg = ExperimentConfig::from_json(r#"{"study": "work-scaling"}"#).unwrap();
        assert_eq!(cfg.study, Study::WorkScaling);
        assert_eq!(cfg.mesh, MeshConfig::default());
        assert_eq!(cfg.algorithm.m, 1);
    }

    #[test]
    fn errors_name_the_field() {
        let err = ExperimentConfig::from_json(r#"{"mesh": {"n_levels": 0}}"#).unwrap_err();
        assert!(err.to_string().contains("mesh.n_levels"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"study": "nope"}"#).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
        let err = ExperimentConfig::from_json(r#"{"reference": {"kind": "file"}}"#).unwrap_err();
        assert!(err.to_string().contains("reference.path"));
    }
}
