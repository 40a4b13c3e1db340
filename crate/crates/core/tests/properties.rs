mod common;

use proptest::prelude::*;

use nlfmg::eigsolve::{smallest_eigpair, solve_level, ScfSettings};
use nlfmg::fem::{assemble_mass, assemble_stiffness, Discretization, DofMap, ProblemSpec};
use nlfmg::linalg::WorkReport;
use nlfmg::mesh::{build_hierarchy, build_initial_mesh, interior_prolongation, prolongation, refine};

#[test]
fn smallest_eigpair_matches_jacobi_oracle_on_seeded_pencils() {
    let pencils = common::random_pencils(20240611, 50);
    let (dl, res) = common::dense_oracle_mismatch(&pencils);
    assert!(dl <= 1e-8, "eigenvalue mismatch {dl:e}");
    assert!(res <= 1e-8, "residual {res:e}");
    for (a, m) in &pencils {
        let (_, x) = smallest_eigpair(&common::to_dense(a), &common::to_dense(m), None).unwrap();
        let xv = nalgebra::DVector::from_column_slice(&x);
        assert!((xv.dot(&(&common::to_dense(m) * &xv)) - 1.0).abs() < 1e-10);
    }
}

fn linear_field(dim: usize, c: &[f64]) -> impl Fn(&[f64]) -> f64 + '_ {
    move |x: &[f64]| c[0] + (0..dim).map(|i| c[i + 1] * x[i]).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prolongation_reproduces_affine_functions(
        dim in 2usize..=3,
        n in 1usize..=4,
        c in proptest::collection::vec(-3.0f64..3.0, 4),
    ) {
        let coarse = build_initial_mesh(dim, n).unwrap();
        let fine = refine(&coarse).unwrap();
        let f = linear_field(dim, &c);
        let nodal = |m: &nlfmg::mesh::MeshLevel| (0..m.n_vertices()).map(|v| f(m.vertex(v))).collect::<Vec<_>>();
        let p = prolongation(&coarse, &fine).unwrap();
        let got = p.matvec(&nodal(&coarse));
        for (g, e) in got.iter().zip(nodal(&fine)) {
            prop_assert!((g - e).abs() < 1e-12);
        }
        // constants in particular
        let ones = p.matvec(&vec![1.0; coarse.n_vertices()]);
        prop_assert!(ones.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn mass_matrix_sums_to_domain_volume(dim in 2usize..=3, n in 1usize..=5, refinements in 0usize..=1) {
        let mut mesh = build_initial_mesh(dim, n).unwrap();
        for _ in 0..refinements {
            mesh = refine(&mesh).unwrap();
        }
        let m = assemble_mass(&mesh, &DofMap::all(&mesh)).unwrap();
        prop_assert!((m.sum_all() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn galerkin_coarsening_of_stiffness_is_exact(dim in 2usize..=3, n in 2usize..=4) {
        let coarse = build_initial_mesh(dim, n).unwrap();
        let fine = refine(&coarse).unwrap();
        let spec = ProblemSpec::laplace(dim).unwrap();
        let ac = assemble_stiffness(&coarse, &DofMap::interior(&coarse), &spec).unwrap();
        let af = assemble_stiffness(&fine, &DofMap::interior(&fine), &spec).unwrap();
        let p = interior_prolongation(&coarse, &fine).unwrap();
        let g = af.galerkin(&p).to_dense();
        let e = ac.to_dense();
        let scale = e.abs().max();
        prop_assert!((g - e).abs().max() <= 1e-12 * scale);
    }

    #[test]
    fn level_eigenpairs_are_b_normalized(zeta in 0.0f64..20.0, n in 3usize..=6, harmonic in any::<bool>()) {
        let spec = if harmonic {
            ProblemSpec::gross_pitaevskii(2, zeta).unwrap()
        } else {
            ProblemSpec::new(2, nlfmg::fem::Potential::Zero, zeta, 1).unwrap()
        };
        let disc = Discretization::new(build_hierarchy(2, n, 2).unwrap(), spec).unwrap();
        for k in 0..2 {
            let (pair, _) = solve_level(&disc, k, &ScfSettings::default(), None, &mut WorkReport::default()).unwrap();
            let b = disc.level(k).mass.quadratic_form(pair.u.coefficients());
            prop_assert!((b - 1.0).abs() < 1e-12);
            // sign convention: entry of largest magnitude is positive
            let big = pair.u.coefficients().iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            prop_assert!(big > 0.0);
        }
    }
}
