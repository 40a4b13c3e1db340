//! P1 assembly of stiffness, mass and weighted-mass matrices.

use super::function::FeFunction;
use super::problem::{Potential, ProblemSpec};
use super::quadrature::{rule_for, QuadratureRule};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::MeshLevel;

/// Numbering of the degrees of freedom of a mesh and the sparsity pattern
/// of its P1 operators.
#[derive(Debug, Clone)]
pub struct DofMap {
    level_index: usize,
    dof_of_vertex: Vec<Option<usize>>,
    vertex_of_dof: Vec<usize>,
    pattern: CsrMatrix,
}

impl DofMap {
    /// Interior vertices only (homogeneous Dirichlet values eliminated).
    pub fn interior(mesh: &MeshLevel) -> Self {
        Self::from_numbering(mesh, mesh.interior_numbering())
    }

    /// Every vertex, boundary included.
    pub fn all(mesh: &MeshLevel) -> Self {
        Self::from_numbering(mesh, (0..mesh.n_vertices()).map(Some).collect())
    }

    fn from_numbering(mesh: &MeshLevel, dof_of_vertex: Vec<Option<usize>>) -> Self {
        let mut vertex_of_dof = Vec::new();
        for (v, d) in dof_of_vertex.iter().enumerate() {
            if d.is_some() {
                vertex_of_dof.push(v);
            }
        }
        let n = vertex_of_dof.len();
        let mut triplets = Vec::with_capacity(mesh.n_cells() * (mesh.dim() + 1).pow(2));
        for cell in mesh.cells() {
            for &a in cell {
                let Some(i) = dof_of_vertex[a] else { continue };
                for &b in cell {
                    if let Some(j) = dof_of_vertex[b] {
                        triplets.push((i, j, 0.0));
                    }
                }
            }
        }
        Self {
            level_index: mesh.level_index(),
            pattern: CsrMatrix::from_triplets(n, n, &triplets),
            dof_of_vertex,
            vertex_of_dof,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.vertex_of_dof.len()
    }

    pub fn level_index(&self) -> usize {
        self.level_index
    }

    pub fn dof(&self, vertex: usize) -> Option<usize> {
        self.dof_of_vertex[vertex]
    }

    pub fn vertex(&self, dof: usize) -> usize {
        self.vertex_of_dof[dof]
    }

    pub fn pattern(&self) -> &CsrMatrix {
        &self.pattern
    }

    /// Nodal values on every vertex (zero where no dof lives).
    pub fn expand(&self, coefficients: &[f64]) -> Vec<f64> {
        assert_eq!(coefficients.len(), self.n_dofs());
        self.dof_of_vertex
            .iter()
            .map(|d| d.map_or(0.0, |i| coefficients[i]))
            .collect()
    }

    /// Coefficients from nodal values.
    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        self.vertex_of_dof.iter().map(|&v| nodal[v]).collect()
    }

    /// Nodal interpolant of a field.
    pub fn interpolate(&self, mesh: &MeshLevel, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.vertex_of_dof.iter().map(|&v| f(mesh.vertex(v))).collect()
    }
}

/// Measure and barycentric gradients of one simplex.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CellGeometry {
    pub measure: f64,
    /// `grads[a]` is the constant gradient of the barycentric coordinate of
    /// local vertex `a`.
    pub grads: [[f64; 3]; 4],
}

pub(crate) fn cell_geometry(mesh: &MeshLevel, c: usize) -> Result<CellGeometry> {
    let cell = mesh.cell(c);
    let dim = mesh.dim();
    let x0 = mesh.vertex(cell[0]);
    // Jacobian columns e_i = x_i - x_0
    let mut j = [[0.0; 3]; 3];
    for i in 0..dim {
        let xi = mesh.vertex(cell[i + 1]);
        for r in 0..dim {
            j[r][i] = xi[r] - x0[r];
        }
    }
    let mut grads = [[0.0; 3]; 4];
    let (det, measure) = if dim == 2 {
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        // rows of J^{-1}
        grads[1] = [j[1][1] / det, -j[0][1] / det, 0.0];
        grads[2] = [-j[1][0] / det, j[0][0] / det, 0.0];
        (det, det.abs() / 2.0)
    } else {
        let cof = |r1: usize, c1: usize, r2: usize, c2: usize| j[r1][c1] * j[r2][c2] - j[r1][c2] * j[r2][c1];
        let det = j[0][0] * cof(1, 1, 2, 2) - j[0][1] * cof(1, 0, 2, 2) + j[0][2] * cof(1, 0, 2, 1);
        let inv = [
            [cof(1, 1, 2, 2), -cof(0, 1, 2, 2), cof(0, 1, 1, 2)],
            [-cof(1, 0, 2, 2), cof(0, 0, 2, 2), -cof(0, 0, 1, 2)],
            [cof(1, 0, 2, 1), -cof(0, 0, 2, 1), cof(0, 0, 1, 1)],
        ];
        for i in 0..3 {
            grads[i + 1] = [inv[i][0] / det, inv[i][1] / det, inv[i][2] / det];
        }
        (det, det.abs() / 6.0)
    };
    let h = mesh.mesh_size();
    if !(det.abs() > 1e-14 * h.powi(dim as i32)) {
        return Err(Error::DegenerateCell { cell: c, measure });
    }
    for r in 0..3 {
        grads[0][r] = -(1..=dim).map(|a| grads[a][r]).sum::<f64>();
    }
    Ok(CellGeometry { measure, grads })
}

fn scatter(matrix: &mut CsrMatrix, dofs: &DofMap, cell: &[usize], local: &[[f64; 4]; 4]) {
    let nb = cell.len();
    for a in 0..nb {
        let Some(i) = dofs.dof(cell[a]) else { continue };
        for b in 0..nb {
            if let Some(j) = dofs.dof(cell[b]) {
                let k = matrix.position(i, j).expect("entry in P1 pattern");
                matrix.values_mut()[k] += local[a][b];
            }
        }
    }
}

fn check_level(mesh: &MeshLevel, dofs: &DofMap) -> Result<()> {
    if dofs.level_index() != mesh.level_index() || dofs.dof_of_vertex.len() != mesh.n_vertices() {
        return Err(Error::InvalidArgument(format!(
            "dof map of level {} used on level {}",
            dofs.level_index(),
            mesh.level_index()
        )));
    }
    Ok(())
}

/// Matrix of `â(w, v) = ∫ A ∇w · ∇v`.
pub fn assemble_stiffness(mesh: &MeshLevel, dofs: &DofMap, spec: &ProblemSpec) -> Result<CsrMatrix> {
    check_level(mesh, dofs)?;
    let dim = mesh.dim();
    let a = spec.diffusion();
    let mut matrix = dofs.pattern().zeros_like();
    let mut local = [[0.0; 4]; 4];
    for c in 0..mesh.n_cells() {
        let g = cell_geometry(mesh, c)?;
        for p in 0..=dim {
            // A ∇λ_p
            let mut agp = [0.0; 3];
            for r in 0..dim {
                agp[r] = (0..dim).map(|s| a[r * dim + s] * g.grads[p][s]).sum();
            }
            for q in 0..=dim {
                local[p][q] = g.measure * (0..dim).map(|r| agp[r] * g.grads[q][r]).sum::<f64>();
            }
        }
        scatter(&mut matrix, dofs, mesh.cell(c), &local);
    }
    Ok(matrix.symmetrized())
}

/// Matrix of `b(w, v) = ∫ w v`, integrated exactly.
pub fn assemble_mass(mesh: &MeshLevel, dofs: &DofMap) -> Result<CsrMatrix> {
    check_level(mesh, dofs)?;
    let dim = mesh.dim();
    let denom = ((dim + 1) * (dim + 2)) as f64;
    let mut matrix = dofs.pattern().zeros_like();
    let mut local = [[0.0; 4]; 4];
    for c in 0..mesh.n_cells() {
        let g = cell_geometry(mesh, c)?;
        for (p, row) in local.iter_mut().enumerate().take(dim + 1) {
            for (q, v) in row.iter_mut().enumerate().take(dim + 1) {
                *v = g.measure * if p == q { 2.0 } else { 1.0 } / denom;
            }
        }
        scatter(&mut matrix, dofs, mesh.cell(c), &local);
    }
    Ok(matrix)
}

/// Weight of a weighted mass matrix `∫ g^power φ_i φ_j`.
#[derive(Debug, Clone, Copy)]
pub enum Weight<'a> {
    /// An analytic field, treated as a quadratic polynomial for the choice
    /// of quadrature degree.
    Field(&'a Potential),
    /// A P1 function on the same level (interior coefficients).
    Function(&'a FeFunction),
    /// A P1 function given by its values on every vertex.
    Nodal(&'a [f64]),
}

/// Matrix of `∫ g^power φ_i φ_j` with quadrature exact for the integrand's
/// polynomial degree.
pub fn assemble_weighted_mass(mesh: &MeshLevel, dofs: &DofMap, weight: Weight<'_>, power: u32) -> Result<CsrMatrix> {
    check_level(mesh, dofs)?;
    let (degree, nodal) = match weight {
        Weight::Field(_) => (2 * power as usize + 2, None),
        Weight::Function(u) => {
            if u.level_index() != mesh.level_index() {
                return Err(Error::InvalidArgument(format!(
                    "weight lives on level {}, mesh is level {}",
                    u.level_index(),
                    mesh.level_index()
                )));
            }
            if u.len() != mesh.n_interior() {
                return Err(Error::DimensionMismatch {
                    expected: mesh.n_interior(),
                    got: u.len(),
                });
            }
            let c = u.coefficients();
            let nodal: Vec<f64> = mesh.interior_numbering().iter().map(|d| d.map_or(0.0, |i| c[i])).collect();
            (power as usize + 2, Some(nodal))
        }
        Weight::Nodal(values) => {
            if values.len() != mesh.n_vertices() {
                return Err(Error::DimensionMismatch {
                    expected: mesh.n_vertices(),
                    got: values.len(),
                });
            }
            (power as usize + 2, None)
        }
    };
    let rule = rule_for(mesh.dim(), degree)?;
    let nodal_values: Option<&[f64]> = match weight {
        Weight::Nodal(v) => Some(v),
        _ => nodal.as_deref(),
    };
    let field = match weight {
        Weight::Field(p) => Some(p),
        _ => None,
    };
    weighted_mass_with(mesh, dofs, &rule, power, |cell, bary, x| match (field, nodal_values) {
        (Some(p), _) => p.eval(x),
        (None, Some(w)) => cell.iter().zip(bary).map(|(&v, &l)| w[v] * l).sum(),
        (None, None) => unreachable!(),
    })
}

/// Shared kernel: `∫ g(x)^power φ_i φ_j` where `g` is evaluated at each
/// quadrature point given the cell, barycentric coordinates and position.
pub(crate) fn weighted_mass_with(
    mesh: &MeshLevel,
    dofs: &DofMap,
    rule: &QuadratureRule,
    power: u32,
    g: impl Fn(&[usize], &[f64], &[f64]) -> f64,
) -> Result<CsrMatrix> {
    let dim = mesh.dim();
    let nb = dim + 1;
    let mut matrix = dofs.pattern().zeros_like();
    let mut local = [[0.0; 4]; 4];
    let mut x = [0.0; 3];
    for c in 0..mesh.n_cells() {
        let cell = mesh.cell(c);
        if cell.iter().all(|&v| dofs.dof(v).is_none()) {
            continue;
        }
        let geo = cell_geometry(mesh, c)?;
        local.iter_mut().for_each(|r| *r = [0.0; 4]);
        for (bary, w) in rule.points.iter().zip(&rule.weights) {
            x[..dim].iter_mut().for_each(|v| *v = 0.0);
            for a in 0..nb {
                let xa = mesh.vertex(cell[a]);
                for r in 0..dim {
                    x[r] += bary[a] * xa[r];
                }
            }
            let gv = g(cell, &bary[..nb], &x[..dim]).powi(power as i32);
            if gv == 0.0 {
                continue;
            }
            let s = w * gv * geo.measure;
            for a in 0..nb {
                for b in a..nb {
                    local[a][b] += s * bary[a] * bary[b];
                }
            }
        }
        for a in 0..nb {
            for b in 0..a {
                local[a][b] = local[b][a];
            }
        }
        scatter(&mut matrix, dofs, cell, &local);
    }
    Ok(matrix.symmetrized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_initial_mesh, refine};

    #[test]
    fn no_interior_dofs_gives_empty_matrix() {
        let m = build_initial_mesh(2, 1).unwrap();
        let dofs = DofMap::interior(&m);
        let k = assemble_stiffness(&m, &dofs, &ProblemSpec::laplace(2).unwrap()).unwrap();
        assert_eq!((k.nrows(), k.ncols()), (0, 0));
    }

    #[test]
    fn five_point_stencil_on_4x4_grid() {
        // hand assembly: on the right-triangle pair of each box the diagonal
        // edge meets the right angles, so its cotangent weight vanishes and
        // only axis neighbours couple with -1; each vertex collects 4
        let m = build_initial_mesh(2, 4).unwrap();
        let dofs = DofMap::interior(&m);
        let k = assemble_stiffness(&m, &dofs, &ProblemSpec::laplace(2).unwrap()).unwrap();
        assert_eq!(k.nrows(), 9);
        for i in 0..9 {
            let (ri, ci): (usize, usize) = (i / 3, i % 3);
            for j in 0..9 {
                let (rj, cj): (usize, usize) = (j / 3, j % 3);
                let dist = ri.abs_diff(rj) + ci.abs_diff(cj);
                let expect = match dist {
                    0 => 4.0,
                    1 => -1.0,
                    _ => 0.0,
                };
                assert!((k.get(i, j) - expect).abs() < 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn reference_triangle_mass() {
        // single right triangle: exact ∫ λ_a λ_b = area (1 + δ_ab) / 12
        let m = build_initial_mesh(2, 1).unwrap();
        let dofs = DofMap::all(&m);
        let mass = assemble_mass(&m, &dofs).unwrap();
        // vertex 1 = (1,0) belongs only to the first triangle (area 1/2)
        assert!((mass.get(1, 1) - 0.5 * 2.0 / 12.0).abs() < 1e-16);
        // vertex 0 and 3 belong to both
        assert!((mass.get(0, 3) - 2.0 * 0.5 / 12.0).abs() < 1e-16);
        assert!((mass.sum_all() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weighted_mass_consistency() {
        let m = refine(&build_initial_mesh(3, 2).unwrap()).unwrap();
        let dofs = DofMap::interior(&m);
        let one = Potential::Field(std::sync::Arc::new(|_: &[f64]| 1.0));
        let w = assemble_weighted_mass(&m, &dofs, Weight::Field(&one), 1).unwrap();
        let mass = assemble_mass(&m, &dofs).unwrap();
        for (a, b) in w.values().iter().zip(mass.values()) {
            assert!((a - b).abs() <= 1e-13 * b.abs());
        }
        let zero = Potential::Zero;
        let z = assemble_weighted_mass(&m, &dofs, Weight::Field(&zero), 1).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn harmonic_potential_integral() {
        let m = build_initial_mesh(2, 1).unwrap();
        let dofs = DofMap::all(&m);
        let w = assemble_weighted_mass(&m, &dofs, Weight::Field(&Potential::Harmonic), 1).unwrap();
        assert!((w.sum_all() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn weight_on_wrong_level_is_rejected() {
        let coarse = build_initial_mesh(2, 4).unwrap();
        let fine = refine(&coarse).unwrap();
        let u = FeFunction::new(0, vec![1.0; coarse.n_interior()]);
        let r = assemble_weighted_mass(&fine, &DofMap::interior(&fine), Weight::Function(&u), 2);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn high_power_needs_missing_rule() {
        let m = build_initial_mesh(2, 4).unwrap();
        let u = FeFunction::new(0, vec![1.0; m.n_interior()]);
        let r = assemble_weighted_mass(&m, &DofMap::interior(&m), Weight::Function(&u), 4);
        assert!(matches!(r, Err(Error::QuadratureUnavailable { .. })));
    }
}
