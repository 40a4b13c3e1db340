//! Nonlinear eigensolvers: small generalized eigensolves, LOBPCG for large
//! levels, SCF iteration and augmented coarse spaces.

mod augmented;
pub mod dense;
pub mod lobpcg;
mod scf;

pub use augmented::{build_augmented_space, AugmentedSpace, CoarseEmbedding, DEGENERATE_TOL};
pub use dense::{smallest_eigpair, smallest_eigpair_counted, DensePencilSolver};
pub use scf::{
    scf_solve, solve_level, solve_levels_nested, EigenPair, LevelSpace, ScfReport, ScfSettings, ScfSolution,
    ScfSpace, SpaceTag, DENSE_EIG_LIMIT,
};
