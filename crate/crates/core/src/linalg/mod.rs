//! Sparse linear algebra and geometric multigrid.

pub mod csr;
pub mod direct;
pub mod krylov;
pub mod multigrid;
pub mod vector;
pub mod work;

pub use csr::CsrMatrix;
pub use direct::{direct_solve, DenseCholesky};
pub use krylov::{cg_smooth, pcg_solve, CgOutcome};
pub use multigrid::{MgContext, SmootherSettings};
pub use work::WorkReport;
