//! Full multigrid finite element solver for nonlinear elliptic eigenvalue
//! problems of Gross-Pitaevskii type,
//!
//! ```text
//! -div(A grad u) + W u + zeta |u|^(2 sigma) u = lambda u   in Omega = [0,1]^d,
//! u = 0 on the boundary,  ||u||_0 = 1,
//! ```
//!
//! discretized with P1 elements on a nested hierarchy of Kuhn simplicial
//! meshes. The nonlinear problem is solved exactly only on a coarse space;
//! every finer level is reached by prolongation followed by correction steps
//! that combine a few multigrid cycles for a linear boundary value problem
//! with a small nonlinear eigensolve on the coarse space augmented by one
//! fine-level function.
//!
//! Layout:
//!
//! - [`mesh`]: box meshes, regular refinement, prolongation operators
//! - [`fem`]: P1 assembly, quadrature, problem data, per-level operators
//! - [`linalg`]: CSR kernels, CG smoothing, geometric multigrid, work counters
//! - [`eigsolve`]: small generalized eigensolves, SCF iteration, augmented spaces
//! - [`fmg`]: the correction step and the full multigrid driver
//! - [`harness`]: experiment configuration, studies, reports

pub mod eigsolve;
pub mod error;
pub mod fem;
pub mod fmg;
pub mod harness;
pub mod linalg;
pub mod mesh;

pub use error::{Error, Result};

/// Refinement index: every refinement halves the mesh size.
pub const BETA: usize = 2;
