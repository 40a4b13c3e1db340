use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// Machine-independent work accounting. One unit is one traversed sparse
/// matrix nonzero; dense work on the small coarse and augmented systems is
/// tallied separately in `dense_entries`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkReport {
    /// Nonzeros traversed by sparse products, smoothing and restriction.
    pub matvec_nonzeros: u64,
    /// Entries produced or traversed by matrix assembly and Galerkin reduction.
    pub assembly_nonzeros: u64,
    /// Entries traversed by dense factorizations and dense solves.
    pub dense_entries: u64,
    /// Number of matrix assemblies.
    pub assemblies: u64,
    /// Number of coarsest-level direct solves.
    pub coarse_solves: u64,
    /// Number of self-consistent field iterations.
    pub scf_iterations: u64,
}

impl WorkReport {
    /// Work units: sparse nonzeros traversed by products and assembly.
    pub fn units(&self) -> u64 {
        self.matvec_nonzeros + self.assembly_nonzeros
    }

    /// Work units plus dense entries.
    pub fn units_with_dense(&self) -> u64 {
        self.units() + self.dense_entries
    }

    pub fn add_matvec(&mut self, nnz: usize) {
        self.matvec_nonzeros += nnz as u64;
    }

    pub fn add_assembly(&mut self, nnz: usize) {
        self.assemblies += 1;
        self.assembly_nonzeros += nnz as u64;
    }

    pub fn add_dense(&mut self, entries: usize) {
        self.dense_entries += entries as u64;
    }
}

impl Add for WorkReport {
    type Output = WorkReport;

    fn add(mut self, rhs: WorkReport) -> WorkReport {
        self += rhs;
        self
    }
}

impl AddAssign for WorkReport {
    fn add_assign(&mut self, rhs: WorkReport) {
        self.matvec_nonzeros += rhs.matvec_nonzeros;
        self.assembly_nonzeros += rhs.assembly_nonzeros;
        self.dense_entries += rhs.dense_entries;
        self.assemblies += rhs.assemblies;
        self.coarse_solves += rhs.coarse_solves;
        self.scf_iterations += rhs.scf_iterations;
    }
}

impl Sub for WorkReport {
    type Output = WorkReport;

    /// Difference of two snapshots of the same monotone counter.
    fn sub(self, rhs: WorkReport) -> WorkReport {
        WorkReport {
            matvec_nonzeros: self.matvec_nonzeros - rhs.matvec_nonzeros,
            assembly_nonzeros: self.assembly_nonzeros - rhs.assembly_nonzeros,
            dense_entries: self.dense_entries - rhs.dense_entries,
            assemblies: self.assemblies - rhs.assemblies,
            coarse_solves: self.coarse_solves - rhs.coarse_solves,
            scf_iterations: self.scf_iterations - rhs.scf_iterations,
        }
    }
}
