//! Simplicial meshes of axis-aligned boxes and their nested refinement.
//!
//! The initial mesh splits every grid box into Kuhn simplices: 2 triangles
//! in 2D, 6 tetrahedra in 3D, each simplex being the path from the box's
//! lower corner that adds one unit direction at a time. Regular refinement
//! follows Bey's rule with fixed vertex ordering, under which every child of
//! a Kuhn simplex is again a Kuhn simplex of half the size. The meshes stay
//! conforming, nested and congruent across levels.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::BETA;

const BOUNDARY_TOL: f64 = 1e-12;

/// Default cap on the estimated memory of a single mesh level.
pub const DEFAULT_MEMORY_BUDGET: usize = 6 << 30;

/// Axis-aligned box `[lower, upper]` in `dim` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    fn on_boundary(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .any(|(&xi, (&lo, &hi))| (xi - lo).abs() <= BOUNDARY_TOL || (xi - hi).abs() <= BOUNDARY_TOL)
    }
}

/// One conforming simplicial mesh of a box.
#[derive(Debug, Clone)]
pub struct MeshLevel {
    dim: usize,
    domain: BoxDomain,
    /// Flat coordinates, `dim` per vertex.
    coords: Vec<f64>,
    /// Flat cell connectivity, `dim + 1` vertex indices per cell.
    cells: Vec<usize>,
    boundary: Vec<bool>,
    level_index: usize,
    mesh_size: f64,
    /// For a refined level: the parent edge of every vertex created by the
    /// refinement, in vertex order starting at `n_parent_vertices`.
    midpoint_parents: Vec<[usize; 2]>,
    n_parent_vertices: usize,
}

impl MeshLevel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn n_vertices(&self) -> usize {
        self.boundary.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.cells[c * k..(c + 1) * k]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks_exact(self.dim + 1)
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn n_interior(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }

    pub fn level_index(&self) -> usize {
        self.level_index
    }

    /// Maximum cell diameter.
    pub fn mesh_size(&self) -> f64 {
        self.mesh_size
    }

    /// Map from vertex index to interior-dof index (`None` on the boundary).
    /// Interior dofs are numbered in increasing vertex order.
    pub fn interior_numbering(&self) -> Vec<Option<usize>> {
        let mut next = 0;
        self.boundary
            .iter()
            .map(|&b| {
                if b {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    }

    /// Unsigned measure (area or volume) of cell `c`.
    pub fn cell_measure(&self, c: usize) -> f64 {
        simplex_measure(self, self.cell(c))
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_measure(c)).sum()
    }

    /// Plain-text dump: a `# vertices N` header, one `x y [z]` line per
    /// vertex, a `# cells M` header, then one line of 0-based vertex indices
    /// per cell.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# vertices {}", self.n_vertices())?;
        for v in 0..self.n_vertices() {
            let line: Vec<String> = self.vertex(v).iter().map(|x| format!("{x}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        writeln!(out, "# cells {}", self.n_cells())?;
        for cell in self.cells() {
            let line: Vec<String> = cell.iter().map(|i| i.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

fn simplex_measure(mesh: &MeshLevel, cell: &[usize]) -> f64 {
    let x0 = mesh.vertex(cell[0]);
    match mesh.dim {
        2 => {
            let (a, b) = (mesh.vertex(cell[1]), mesh.vertex(cell[2]));
            0.5 * ((a[0] - x0[0]) * (b[1] - x0[1]) - (a[1] - x0[1]) * (b[0] - x0[0])).abs()
        }
        3 => {
            let e: Vec<[f64; 3]> = cell[1..]
                .iter()
                .map(|&v| {
                    let x = mesh.vertex(v);
                    [x[0] - x0[0], x[1] - x0[1], x[2] - x0[2]]
                })
                .collect();
            let det = e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1])
                - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0])
                + e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0]);
            det.abs() / 6.0
        }
        _ => unreachable!("dimension checked at construction"),
    }
}

fn max_cell_diameter(dim: usize, coords: &[f64], cells: &[usize]) -> f64 {
    let mut h2 = 0.0_f64;
    for cell in cells.chunks_exact(dim + 1) {
        for a in 0..cell.len() {
            for b in a + 1..cell.len() {
                let (pa, pb) = (&coords[cell[a] * dim..][..dim], &coords[cell[b] * dim..][..dim]);
                let d2: f64 = pa.iter().zip(pb).map(|(x, y)| (x - y) * (x - y)).sum();
                h2 = h2.max(d2);
            }
        }
    }
    h2.sqrt()
}

/// Uniform Kuhn mesh of `[0,1]^dim` with `divisions_per_axis` boxes per axis.
pub fn build_initial_mesh(dim: usize, divisions_per_axis: usize) -> Result<MeshLevel> {
    build_box_mesh(&BoxDomain::unit(dim), divisions_per_axis)
}

/// Uniform Kuhn mesh of an arbitrary box.
pub fn build_box_mesh(domain: &BoxDomain, divisions_per_axis: usize) -> Result<MeshLevel> {
    let dim = domain.dim();
    if dim != 2 && dim != 3 {
        return Err(Error::InvalidArgument(format!("unsupported dimension {dim}")));
    }
    if divisions_per_axis == 0 {
        return Err(Error::InvalidArgument("divisions_per_axis must be >= 1".into()));
    }
    if domain.lower.iter().zip(&domain.upper).any(|(a, b)| b <= a) {
        return Err(Error::InvalidArgument("empty box".into()));
    }
    let n = divisions_per_axis;
    let np = n + 1;
    let n_vertices = np.pow(dim as u32);
    let mut coords = Vec::with_capacity(n_vertices * dim);
    // vertex (i, j[, k]) has index i + np*j [+ np^2*k]
    for flat in 0..n_vertices {
        let mut rem = flat;
        for axis in 0..dim {
            let idx = rem % np;
            rem /= np;
            let t = idx as f64 / n as f64;
            coords.push(domain.lower[axis] + t * (domain.upper[axis] - domain.lower[axis]));
        }
    }
    let stride: Vec<usize> = (0..dim).map(|a| np.pow(a as u32)).collect();
    let perms: Vec<Vec<usize>> = if dim == 2 {
        vec![vec![0, 1], vec![1, 0]]
    } else {
        vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ]
    };
    let n_boxes = n.pow(dim as u32);
    let mut cells = Vec::with_capacity(n_boxes * perms.len() * (dim + 1));
    for b in 0..n_boxes {
        let mut rem = b;
        let mut corner = 0;
        for s in &stride {
            corner += (rem % n) * s;
            rem /= n;
        }
        for perm in &perms {
            let mut v = corner;
            cells.push(v);
            for &axis in perm {
                v += stride[axis];
                cells.push(v);
            }
        }
    }
    let boundary = (0..n_vertices)
        .map(|v| domain.on_boundary(&coords[v * dim..(v + 1) * dim]))
        .collect();
    let mesh_size = max_cell_diameter(dim, &coords, &cells);
    Ok(MeshLevel {
        dim,
        domain: domain.clone(),
        coords,
        cells,
        boundary,
        level_index: 0,
        mesh_size,
        midpoint_parents: Vec::new(),
        n_parent_vertices: 0,
    })
}

/// Child vertex patterns of the regular refinement, in terms of local
/// indices into `[x0, .., xd, x01, x02, ..]` (see [`refine`]).
const CHILDREN_2D: [[usize; 3]; 4] = [
    // x0 x1 x2 | x01=3 x02=4 x12=5
    [0, 3, 4],
    [3, 1, 5],
    [4, 5, 2],
    [3, 4, 5],
];

const CHILDREN_3D: [[usize; 4]; 8] = [
    // x0 x1 x2 x3 | x01=4 x02=5 x03=6 x12=7 x13=8 x23=9
    [0, 4, 5, 6],
    [4, 1, 7, 8],
    [5, 7, 2, 9],
    [6, 8, 9, 3],
    [4, 5, 6, 8],
    [4, 5, 7, 8],
    [5, 6, 8, 9],
    [5, 7, 8, 9],
];

/// One regular refinement: every edge gets its midpoint as a new vertex and
/// every simplex splits into `2^dim` children. Parent vertices keep their
/// indices as a prefix of the child's vertex list.
pub fn refine(coarse: &MeshLevel) -> Result<MeshLevel> {
    let dim = coarse.dim;
    let nv = coarse.n_vertices();
    let mut coords = coarse.coords.clone();
    let mut midpoint_parents = Vec::new();
    let mut edge_index: HashMap<(usize, usize), usize> =
        HashMap::with_capacity(coarse.n_cells() * if dim == 2 { 2 } else { 7 });
    let children_per_cell = 1 << dim;
    let mut cells = Vec::with_capacity(coarse.cells.len() * children_per_cell);
    let mut local = [0usize; 10];

    for cell in coarse.cells() {
        local[..=dim].copy_from_slice(cell);
        let mut slot = dim + 1;
        for a in 0..=dim {
            for b in a + 1..=dim {
                let key = (cell[a].min(cell[b]), cell[a].max(cell[b]));
                let idx = *edge_index.entry(key).or_insert_with(|| {
                    let id = nv + midpoint_parents.len();
                    midpoint_parents.push([key.0, key.1]);
                    for axis in 0..dim {
                        let m = 0.5 * (coarse.coords[key.0 * dim + axis] + coarse.coords[key.1 * dim + axis]);
                        coords.push(m);
                    }
                    id
                });
                local[slot] = idx;
                slot += 1;
            }
        }
        if dim == 2 {
            for child in &CHILDREN_2D {
                cells.extend(child.iter().map(|&l| local[l]));
            }
        } else {
            for child in &CHILDREN_3D {
                cells.extend(child.iter().map(|&l| local[l]));
            }
        }
    }

    let n_vertices = coords.len() / dim;
    let boundary = (0..n_vertices)
        .map(|v| coarse.domain.on_boundary(&coords[v * dim..(v + 1) * dim]))
        .collect();
    let mesh_size = max_cell_diameter(dim, &coords, &cells);
    Ok(MeshLevel {
        dim,
        domain: coarse.domain.clone(),
        coords,
        cells,
        boundary,
        level_index: coarse.level_index + 1,
        mesh_size,
        midpoint_parents,
        n_parent_vertices: nv,
    })
}

/// Nodal interpolation from `coarse` to `fine = refine(coarse)` over all
/// vertices: inherited vertices copy their value, midpoints average the two
/// endpoints of their parent edge.
pub fn prolongation(coarse: &MeshLevel, fine: &MeshLevel) -> Result<CsrMatrix> {
    check_parent(coarse, fine)?;
    let nc = coarse.n_vertices();
    let mut triplets = Vec::with_capacity(nc + 2 * fine.midpoint_parents.len());
    for v in 0..nc {
        triplets.push((v, v, 1.0));
    }
    for (k, &[a, b]) in fine.midpoint_parents.iter().enumerate() {
        triplets.push((nc + k, a, 0.5));
        triplets.push((nc + k, b, 0.5));
    }
    Ok(CsrMatrix::from_triplets(fine.n_vertices(), nc, &triplets))
}

/// The prolongation restricted to interior dofs: rows are interior fine
/// vertices, columns interior coarse vertices. Boundary parents carry the
/// homogeneous Dirichlet value and are dropped.
pub fn interior_prolongation(coarse: &MeshLevel, fine: &MeshLevel) -> Result<CsrMatrix> {
    check_parent(coarse, fine)?;
    let cmap = coarse.interior_numbering();
    let fmap = fine.interior_numbering();
    let nc = coarse.n_vertices();
    let mut triplets = Vec::new();
    for v in 0..fine.n_vertices() {
        let Some(row) = fmap[v] else { continue };
        if v < nc {
            triplets.push((row, cmap[v].expect("inherited interior vertex"), 1.0));
        } else {
            for p in fine.midpoint_parents[v - nc] {
                if let Some(col) = cmap[p] {
                    triplets.push((row, col, 0.5));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(fine.n_interior(), coarse.n_interior(), &triplets))
}

fn check_parent(coarse: &MeshLevel, fine: &MeshLevel) -> Result<()> {
    if fine.dim != coarse.dim
        || fine.n_parent_vertices != coarse.n_vertices()
        || fine.level_index != coarse.level_index + 1
        || fine.n_cells() != coarse.n_cells() << coarse.dim
    {
        return Err(Error::InvalidArgument(format!(
            "level {} is not the refinement of level {}",
            fine.level_index, coarse.level_index
        )));
    }
    Ok(())
}

/// Nested meshes `V_H ⊆ V_{h_1} ⊂ … ⊂ V_{h_n}` with their prolongations.
///
/// `levels[0]` is the coarse space `V_H`; `levels[coarse_depth]` is
/// `V_{h_1}`. With the default `coarse_depth = 0` the two coincide.
#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    levels: Vec<MeshLevel>,
    /// `prolongations[k]` maps level `k` to level `k + 1` (all vertices).
    prolongations: Vec<CsrMatrix>,
    coarse_depth: usize,
}

impl MeshHierarchy {
    pub fn levels(&self) -> &[MeshLevel] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &MeshLevel {
        &self.levels[k]
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn beta(&self) -> usize {
        BETA
    }

    pub fn dim(&self) -> usize {
        self.levels[0].dim
    }

    pub fn prolongations(&self) -> &[CsrMatrix] {
        &self.prolongations
    }

    /// Number of refinements between `V_H` and `V_{h_1}`.
    pub fn coarse_depth(&self) -> usize {
        self.coarse_depth
    }

    /// Index of `V_{h_1}` in [`levels`](Self::levels).
    pub fn first_level(&self) -> usize {
        self.coarse_depth
    }

    /// Append one more refinement (used for extra-level reference solves).
    pub fn push_refinement(&mut self) -> Result<()> {
        let last = self.levels.last().unwrap();
        let fine = refine(last)?;
        self.prolongations.push(prolongation(last, &fine)?);
        self.levels.push(fine);
        Ok(())
    }
}

/// `n_levels` nested levels of `[0,1]^dim`, the first with
/// `divisions_per_axis` boxes per axis.
pub fn build_hierarchy(dim: usize, divisions_per_axis: usize, n_levels: usize) -> Result<MeshHierarchy> {
    build_hierarchy_with(dim, divisions_per_axis, n_levels, 0, DEFAULT_MEMORY_BUDGET)
}

/// General hierarchy builder.
///
/// `divisions_per_axis` describes `V_{h_1}`; `coarse_depth > 0` puts `V_H`
/// that many refinements below it (the divisions must be divisible by
/// `2^coarse_depth`). `n_levels` counts `V_{h_1} … V_{h_n}`. Fails with a
/// resource error naming the level whose estimated footprint exceeds
/// `memory_budget` bytes.
pub fn build_hierarchy_with(
    dim: usize,
    divisions_per_axis: usize,
    n_levels: usize,
    coarse_depth: usize,
    memory_budget: usize,
) -> Result<MeshHierarchy> {
    if n_levels == 0 {
        return Err(Error::InvalidArgument("n_levels must be >= 1".into()));
    }
    let factor = 1usize << coarse_depth;
    if divisions_per_axis == 0 || divisions_per_axis % factor != 0 {
        return Err(Error::InvalidArgument(format!(
            "divisions_per_axis {divisions_per_axis} not divisible by 2^{coarse_depth}"
        )));
    }
    let coarse = build_initial_mesh(dim, divisions_per_axis / factor)?;
    let mut hierarchy = MeshHierarchy {
        levels: vec![coarse],
        prolongations: Vec::new(),
        coarse_depth,
    };
    let total = n_levels + coarse_depth;
    for k in 1..total {
        let last = hierarchy.levels.last().unwrap();
        let bytes = estimated_bytes(dim, last.n_cells() << dim);
        if bytes > memory_budget {
            return Err(Error::ResourceExhausted { level: k, bytes });
        }
        hierarchy.push_refinement()?;
    }
    Ok(hierarchy)
}

/// Rough footprint of a level with `cells` Kuhn simplices: connectivity,
/// coordinates, and about four assembled operators with `4 dim` nonzeros per
/// row (value plus column index).
fn estimated_bytes(dim: usize, cells: usize) -> usize {
    let vertices = cells / if dim == 2 { 2 } else { 6 };
    cells * (dim + 1) * 8 + vertices * (dim * 8 + 1 + 4 * 4 * dim * 16)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_2d_mesh() {
        let m = build_initial_mesh(2, 1).unwrap();
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.n_vertices(), 4);
        assert!(m.boundary_flags().iter().all(|&b| b));
        assert_eq!(m.n_interior(), 0);
    }

    #[test]
    fn grid_4x4_counts() {
        let m = build_initial_mesh(2, 4).unwrap();
        assert_eq!(m.n_cells(), 32);
        assert_eq!(m.n_vertices(), 25);
        // enumerate the 5x5 lattice: interior means no coordinate on a face
        let interior = (0..5)
            .flat_map(|i| (0..5).map(move |j| (i, j)))
            .filter(|&(i, j)| i > 0 && i < 4 && j > 0 && j < 4)
            .count();
        assert_eq!(m.n_interior(), interior);
        assert_eq!(interior, 9);
    }

    #[test]
    fn kuhn_cube_count_matches_ladder_start() {
        let m = build_initial_mesh(3, 8).unwrap();
        assert_eq!(m.n_cells(), 3072);
        assert!((m.total_measure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unsupported_dimension() {
        assert!(matches!(build_initial_mesh(4, 2), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_initial_mesh(1, 2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn one_refinement_of_unit_square() {
        let m = build_initial_mesh(2, 1).unwrap();
        let f = refine(&m).unwrap();
        assert_eq!(f.n_cells(), 8);
        assert_eq!(f.n_vertices(), 9);
        assert_eq!(f.n_interior(), 1);
        assert!((f.mesh_size() - m.mesh_size() / 2.0).abs() < 1e-15);
        for v in 0..m.n_vertices() {
            assert_eq!(m.vertex(v), f.vertex(v));
        }
    }

    #[test]
    fn refinement_partitions_each_parent_cell() {
        for dim in [2, 3] {
            let m = build_initial_mesh(dim, 2).unwrap();
            let f = refine(&m).unwrap();
            let children = 1 << dim;
            for c in 0..m.n_cells() {
                let sum: f64 = (0..children).map(|k| f.cell_measure(c * children + k)).sum();
                assert!((sum - m.cell_measure(c)).abs() < 1e-15, "dim {dim} cell {c}");
            }
        }
    }

    #[test]
    fn refined_3d_cells_are_kuhn_simplices() {
        // every cell of a refined Kuhn mesh is a path along unit steps of size h
        let f = refine(&refine(&build_initial_mesh(3, 1).unwrap()).unwrap()).unwrap();
        let h = 0.25;
        for cell in f.cells() {
            let mut axes = Vec::new();
            for w in cell.windows(2) {
                let (a, b) = (f.vertex(w[0]), f.vertex(w[1]));
                let d: Vec<f64> = (0..3).map(|i| b[i] - a[i]).collect();
                let axis = (0..3).find(|&i| (d[i] - h).abs() < 1e-14).expect("unit step");
                assert!((0..3).filter(|&i| i != axis).all(|i| d[i].abs() < 1e-14));
                axes.push(axis);
            }
            axes.sort_unstable();
            assert_eq!(axes, vec![0, 1, 2]);
        }
    }

    #[test]
    fn hierarchy_single_level_has_no_prolongations() {
        let h = build_hierarchy(2, 2, 1).unwrap();
        assert_eq!(h.n_levels(), 1);
        assert!(h.prolongations().is_empty());
    }

    #[test]
    fn hierarchy_mesh_sizes_halve() {
        let h = build_hierarchy(2, 2, 4).unwrap();
        let h0 = h.level(0).mesh_size();
        for (k, l) in h.levels().iter().enumerate() {
            let expect = h0 / (1 << k) as f64;
            assert!((l.mesh_size() - expect).abs() <= 1e-12 * expect);
        }
    }

    #[test]
    fn hierarchy_reports_budget_level() {
        let err = build_hierarchy_with(2, 4, 6, 0, 200_000).unwrap_err();
        match err {
            Error::ResourceExhausted { level, .. } => assert!(level >= 1 && level < 6),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn coarse_depth_divisibility() {
        assert!(build_hierarchy_with(2, 6, 2, 2, DEFAULT_MEMORY_BUDGET).is_err());
        let h = build_hierarchy_with(2, 8, 2, 1, DEFAULT_MEMORY_BUDGET).unwrap();
        assert_eq!(h.n_levels(), 3);
        assert_eq!(h.level(h.first_level()).n_cells(), 128);
    }

    #[test]
    fn mismatched_levels_rejected() {
        let a = build_initial_mesh(2, 2).unwrap();
        let b = build_initial_mesh(2, 4).unwrap();
        assert!(prolongation(&a, &b).is_err());
    }

    #[test]
    fn text_dump_layout() {
        let m = build_initial_mesh(2, 1).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 4 + 1 + 2);
        assert_eq!(lines[1], "0 0");
        assert_eq!(lines[6].split(' ').count(), 3);
    }
}
