//! Randomized structural invariants of the decomposition and the steppers.

use proptest::prelude::*;
use surfflow::fem::{self, FieldP0Vec};
use surfflow::hodge::{self, harmonic_basis};
use surfflow::mesh::{generate_mesh, MeshKind, SurfaceMesh};
use surfflow::stepper::{FlowSolver, SimConfig};

fn mesh_by_index(i: usize) -> SurfaceMesh {
    let kinds = [
        MeshKind::Rectangle {
            width: 1.0,
            height: 0.7,
            nx: 5,
            ny: 4,
        },
        MeshKind::Annulus {
            r_inner: 0.5,
            r_outer: 1.0,
            n_radial: 3,
            n_angular: 12,
        },
        MeshKind::Torus { n_theta: 7, n_phi: 6 },
        MeshKind::CylinderLateral {
            radius: 0.5,
            height: 1.0,
            n_angular: 10,
            n_axial: 4,
        },
    ];
    generate_mesh(&kinds[i % kinds.len()]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Components are mutually orthogonal, satisfy Pythagoras, and
    /// reconstruct the input.
    #[test]
    fn decomposition_structure(mesh_idx in 0usize..4, seed in 0u64..1000, draw in 0u64..8) {
        let m = mesh_by_index(mesh_idx);
        let basis = harmonic_basis(&m, seed.wrapping_add(17)).unwrap();
        let x = hodge::random_tangential_field(&m, seed, draw);
        let comps = hodge::hodge_decompose(&m, &basis, &x).unwrap();
        let g = fem::grad_cr(&m, &comps.q);
        let r = fem::rot_p1(&m, &comps.psi);
        let h = basis.combine(&m, &comps.h_coeffs);
        let nx = fem::norm_vec(&m, &x).max(1e-300);

        prop_assert!(fem::inner_vec(&m, &g, &r).abs() < 1e-9 * nx * nx);
        prop_assert!(fem::inner_vec(&m, &g, &h).abs() < 1e-9 * nx * nx);
        prop_assert!(fem::inner_vec(&m, &r, &h).abs() < 1e-9 * nx * nx);

        let sum_sq = fem::inner_vec(&m, &g, &g)
            + fem::inner_vec(&m, &r, &r)
            + fem::inner_vec(&m, &h, &h);
        prop_assert!((sum_sq.sqrt() - nx).abs() < 1e-8 * nx);

        let recon: Vec<_> = g.0.iter().zip(&r.0).zip(&h.0).map(|((a, b), c)| a + b + c).collect();
        let diff: f64 = recon
            .iter()
            .zip(&x.0)
            .zip(m.elem_area())
            .map(|((a, b), &ar)| ar * (a - b).norm_squared())
            .sum::<f64>()
            .sqrt();
        prop_assert!(diff < 1e-8 * nx);
    }

    /// Every state the NS stepper produces is exactly discretely
    /// divergence-free.
    #[test]
    fn ns_states_divergence_free(mesh_idx in 0usize..4, seed in 0u64..1000) {
        let m = mesh_by_index(mesh_idx);
        let basis = harmonic_basis(&m, 3).unwrap();
        let solver = FlowSolver::new(&m, &basis, SimConfig {
            nu: 0.01,
            dt: 5e-4,
            ..Default::default()
        });
        let v0 = hodge::random_tangential_field(&m, seed, 0);
        let mut s = solver.ns_init(&v0).unwrap();
        for _ in 0..5 {
            s = solver.ns_step(&s).unwrap();
            prop_assert!(solver.divergence_residual(&s) < 1e-9);
        }
    }

    /// Unforced Euler flow on a closed surface keeps the vorticity mean at
    /// zero.
    #[test]
    fn euler_mean_vorticity_preserved(seed in 0u64..1000) {
        let m = generate_mesh(&MeshKind::Torus { n_theta: 8, n_phi: 6 }).unwrap();
        let basis = harmonic_basis(&m, 3).unwrap();
        let solver = FlowSolver::new(&m, &basis, SimConfig {
            nu: 0.0,
            dt: 1e-3,
            ..Default::default()
        });
        let v0 = hodge::random_tangential_field(&m, seed, 1);
        let mut s = solver.ns_init(&v0).unwrap();
        // ns_init yields a divergence-free state usable by either scheme.
        let scale = s.omega.0.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        for _ in 0..20 {
            s = solver.euler_step(&s).unwrap();
            prop_assert!(fem::mean_p1(&m, &s.omega).abs() < 1e-10 * scale);
        }
    }

    /// Kinetic energy never increases without forcing (viscous run, small
    /// explicit-step tolerance).
    #[test]
    fn viscous_energy_decays(seed in 0u64..1000) {
        let m = mesh_by_index(2);
        let basis = harmonic_basis(&m, 3).unwrap();
        let solver = FlowSolver::new(&m, &basis, SimConfig {
            nu: 0.05,
            dt: 1e-3,
            ..Default::default()
        });
        let x = hodge::random_tangential_field(&m, seed, 2);
        let scale = 0.1 / fem::norm_vec(&m, &x).max(1e-300);
        let v0 = FieldP0Vec(x.0.iter().map(|v| v * scale).collect());
        let mut s = solver.ns_init(&v0).unwrap();
        let mut e = solver.kinetic_energy(&s);
        for _ in 0..20 {
            s = solver.ns_step(&s).unwrap();
            let e_new = solver.kinetic_energy(&s);
            prop_assert!(e_new <= e * (1.0 + 1e-9));
            e = e_new;
        }
    }
}
