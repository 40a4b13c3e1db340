//! P1 finite elements: quadrature, problem data, assembly and per-level
//! operators.

mod assembly;
mod discretization;
mod function;
mod problem;
pub mod quadrature;

pub use assembly::{assemble_mass, assemble_stiffness, assemble_weighted_mass, DofMap, Weight};
pub use discretization::{apply_nonlinear_residual, Discretization, LevelOperators};
pub use function::{a_norm, l2_norm, FeFunction};
pub use problem::{Potential, ProblemSpec};
