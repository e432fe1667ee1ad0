//! Discrete Hodge decomposition X_h = grad_h(Q_h) + rot_h(S_h) + H_h,N and
//! the orthonormal basis of the discrete harmonic space.
//!
//! The harmonic basis is built by projecting random tangential fields:
//! solve a rot-rot Poisson problem in S_h and a grad-grad problem in Q_h,
//! subtract both components, and orthonormalize the remainders.

use crate::error::{Error, Result};
use crate::fem::{
    self, DofSpace, FieldCR, FieldP0Vec, FieldP1, SpaceSolver,
};
use crate::mesh::{SurfaceMesh, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative pivot threshold below which a projected candidate counts as
/// linearly dependent.
const RANK_TOL: f64 = 1e-8;
const MAX_REDRAWS: usize = 5;

/// Orthonormal basis of the discrete harmonic space.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub fields: Vec<FieldP0Vec>,
    pub gram: Vec<Vec<f64>>,
}

impl HarmonicBasis {
    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn gram_residual(&self) -> f64 {
        let l = self.dim();
        let mut worst = 0.0f64;
        for i in 0..l {
            for j in 0..l {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.gram[i][j] - target).abs());
            }
        }
        worst
    }

    /// Harmonic coefficients of X in this (orthonormal) basis.
    pub fn coefficients(&self, mesh: &SurfaceMesh, x: &FieldP0Vec) -> Vec<f64> {
        self.fields
            .iter()
            .map(|h| fem::inner_vec(mesh, x, h))
            .collect()
    }

    /// Linear combination sum_i c_i H_i.
    pub fn combine(&self, mesh: &SurfaceMesh, coeffs: &[f64]) -> FieldP0Vec {
        let mut out = FieldP0Vec::zeros(mesh);
        for (c, h) in coeffs.iter().zip(&self.fields) {
            for (o, v) in out.0.iter_mut().zip(&h.0) {
                *o += *c * *v;
            }
        }
        out
    }
}

/// Components of the orthogonal decomposition of a P0 vector field.
#[derive(Debug, Clone)]
pub struct HodgeComponents {
    /// Zero-mean Crouzeix-Raviart potential of the gradient part.
    pub q: FieldCR,
    /// Streamfunction in S1_0 (full-length coefficient vector).
    pub psi: FieldP1,
    pub h_coeffs: Vec<f64>,
    /// Norm of X minus the reconstruction.
    pub residual: f64,
}

/// dim H_h,N = |E| - |V| - |T| + 1 (+1 on closed surfaces); equals the
/// first Betti number of the surface.
pub fn betti_dimension(mesh: &SurfaceMesh) -> usize {
    let l = mesh.num_edges() as i64 - mesh.num_vertices() as i64 - mesh.num_triangles() as i64
        + 1
        + if mesh.is_closed() { 1 } else { 0 };
    l.max(0) as usize
}

/// The two projection solvers of the decomposition, reusable across fields.
pub struct HodgeProjector {
    pub s_solver: SpaceSolver,
    pub q_solver: SpaceSolver,
}

impl HodgeProjector {
    pub fn new(mesh: &SurfaceMesh, tol: f64) -> Self {
        Self::with_spaces(mesh, DofSpace::s1_0(mesh), DofSpace::cr_zero_mean(mesh), tol)
    }

    pub fn with_spaces(mesh: &SurfaceMesh, s_space: DofSpace, q_space: DofSpace, tol: f64) -> Self {
        HodgeProjector {
            s_solver: SpaceSolver::new(s_space, fem::stiffness_p1(mesh), tol),
            q_solver: SpaceSolver::new(q_space, fem::stiffness_cr(mesh), tol),
        }
    }

    /// Rotational potential: psi with (rot psi, rot phi) = (X, rot phi).
    pub fn rot_potential(&self, mesh: &SurfaceMesh, x: &FieldP0Vec) -> Result<FieldP1> {
        let b = fem::rot_load_p1(mesh, x);
        let x0 = vec![0.0; mesh.num_vertices()];
        let (sol, _) = self.s_solver.solve(&b, &x0)?;
        Ok(FieldP1(sol))
    }

    /// Gradient potential: q with (grad q, grad eta) = (X, grad eta).
    pub fn grad_potential(&self, mesh: &SurfaceMesh, x: &FieldP0Vec) -> Result<FieldCR> {
        let b = fem::grad_load_cr(mesh, x);
        let x0 = vec![0.0; mesh.num_edges()];
        let (sol, _) = self.q_solver.solve(&b, &x0)?;
        Ok(FieldCR(sol))
    }

    /// Remove the gradient and rotational components of X.
    pub fn harmonic_part(&self, mesh: &SurfaceMesh, x: &FieldP0Vec) -> Result<FieldP0Vec> {
        let psi = self.rot_potential(mesh, x)?;
        let q = self.grad_potential(mesh, x)?;
        let rot = fem::rot_p1(mesh, &psi);
        let grad = fem::grad_cr(mesh, &q);
        Ok(FieldP0Vec(
            x.0.iter()
                .zip(&rot.0)
                .zip(&grad.0)
                .map(|((xv, rv), gv)| xv - rv - gv)
                .collect(),
        ))
    }
}

/// Deterministic tangential random field: independent uniform(-1,1) ambient
/// entries per element, keyed by (seed, draw, element), projected in-plane.
pub fn random_tangential_field(mesh: &SurfaceMesh, seed: u64, draw: u64) -> FieldP0Vec {
    FieldP0Vec(
        (0..mesh.num_triangles())
            .map(|t| {
                let key = seed
                    .wrapping_mul(0x9e3779b97f4a7c15)
                    .wrapping_add(draw.wrapping_mul(0xd1b54a32d192ed03))
                    .wrapping_add(t as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(key);
                let v = Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                let n = mesh.elem_normal()[t];
                v - n * v.dot(&n)
            })
            .collect(),
    )
}

/// Build an orthonormal basis of the harmonic space of the given dimension
/// using the shared projector. Used by both the homogeneous and the
/// mixed-boundary construction.
pub fn harmonic_basis_with(
    mesh: &SurfaceMesh,
    projector: &HodgeProjector,
    dim: usize,
    seed: u64,
) -> Result<HarmonicBasis> {
    if dim == 0 {
        return Ok(HarmonicBasis {
            fields: Vec::new(),
            gram: Vec::new(),
        });
    }
    let mut fields: Vec<FieldP0Vec> = Vec::with_capacity(dim);
    let mut leading_pivot: Option<f64> = None;
    let mut draw: u64 = 0;
    let mut redraws = 0usize;
    while fields.len() < dim {
        if redraws > MAX_REDRAWS {
            return Err(Error::LinearDependence { redraws });
        }
        let candidate = random_tangential_field(mesh, seed, draw);
        draw += 1;
        let mut y = projector.harmonic_part(mesh, &candidate)?;
        // Modified Gram-Schmidt with one reorthogonalization pass.
        for _ in 0..2 {
            for f in &fields {
                let c = fem::inner_vec(mesh, &y, f);
                for (yv, fv) in y.0.iter_mut().zip(&f.0) {
                    *yv -= c * *fv;
                }
            }
        }
        let nrm = fem::norm_vec(mesh, &y);
        let lead = *leading_pivot.get_or_insert(nrm);
        if nrm < RANK_TOL * lead {
            redraws += 1;
            continue;
        }
        for yv in &mut y.0 {
            *yv /= nrm;
        }
        fields.push(y);
    }
    let gram: Vec<Vec<f64>> = fields
        .iter()
        .map(|a| fields.iter().map(|b| fem::inner_vec(mesh, a, b)).collect())
        .collect();
    Ok(HarmonicBasis { fields, gram })
}

/// Orthonormal basis of H_h,N for homogeneous (whole-boundary normal
/// velocity) conditions. Deterministic for a fixed seed.
pub fn harmonic_basis(mesh: &SurfaceMesh, seed: u64) -> Result<HarmonicBasis> {
    let dim = betti_dimension(mesh);
    if dim == 0 {
        return Ok(HarmonicBasis {
            fields: Vec::new(),
            gram: Vec::new(),
        });
    }
    let projector = HodgeProjector::new(mesh, 1e-12);
    harmonic_basis_with(mesh, &projector, dim, seed)
}

/// Decompose X into gradient, rotational, and harmonic components.
pub fn hodge_decompose(
    mesh: &SurfaceMesh,
    basis: &HarmonicBasis,
    x: &FieldP0Vec,
) -> Result<HodgeComponents> {
    let projector = HodgeProjector::new(mesh, 1e-12);
    hodge_decompose_with(mesh, &projector, basis, x)
}

pub fn hodge_decompose_with(
    mesh: &SurfaceMesh,
    projector: &HodgeProjector,
    basis: &HarmonicBasis,
    x: &FieldP0Vec,
) -> Result<HodgeComponents> {
    let psi = projector.rot_potential(mesh, x)?;
    let q = projector.grad_potential(mesh, x)?;
    let h_coeffs = basis.coefficients(mesh, x);
    let rot = fem::rot_p1(mesh, &psi);
    let grad = fem::grad_cr(mesh, &q);
    let harm = basis.combine(mesh, &h_coeffs);
    let diff = FieldP0Vec(
        x.0.iter()
            .zip(&rot.0)
            .zip(&grad.0)
            .zip(&harm.0)
            .map(|(((xv, rv), gv), hv)| xv - rv - gv - hv)
            .collect(),
    );
    let residual = fem::norm_vec(mesh, &diff);
    Ok(HodgeComponents {
        q,
        psi,
        h_coeffs,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{grad_cr, inner_vec, norm_vec};
    use crate::mesh::{generate_mesh, MeshKind};
    use approx::assert_relative_eq;

    #[test]
    fn betti_single_triangle_zero() {
        let m = SurfaceMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(betti_dimension(&m), 0);
    }

    #[test]
    fn betti_generator_meshes() {
        let torus = generate_mesh(&MeshKind::Torus {
            n_theta: 8,
            n_phi: 8,
        })
        .unwrap();
        assert_eq!(betti_dimension(&torus), 2);
        let annulus = generate_mesh(&MeshKind::Annulus {
            r_inner: 0.5,
            r_outer: 1.0,
            n_radial: 3,
            n_angular: 12,
        })
        .unwrap();
        assert_eq!(betti_dimension(&annulus), 1);
        let pierced = generate_mesh(&MeshKind::CylinderWithHole {
            n_angular: 128,
            n_axial: 40,
        })
        .unwrap();
        assert_eq!(betti_dimension(&pierced), 2);
    }

    #[test]
    fn disk_has_empty_basis() {
        let m = generate_mesh(&MeshKind::Rectangle {
            width: 1.0,
            height: 1.0,
            nx: 4,
            ny: 4,
        })
        .unwrap();
        let b = harmonic_basis(&m, 7).unwrap();
        assert_eq!(b.dim(), 0);
    }

    #[test]
    fn annulus_harmonic_field_has_circulation() {
        let m = generate_mesh(&MeshKind::Annulus {
            r_inner: 0.5,
            r_outer: 1.0,
            n_radial: 4,
            n_angular: 20,
        })
        .unwrap();
        let b = harmonic_basis(&m, 3).unwrap();
        assert_eq!(b.dim(), 1);
        // Line integral around the inner boundary loop: for each loop edge,
        // take the adjacent element's field value dotted with the edge vector.
        let h = &b.fields[0];
        let mut best = 0.0f64;
        for lp in m.boundary_loops() {
            let mut circ = 0.0;
            for i in 0..lp.len() {
                let (a, c) = (lp[i], lp[(i + 1) % lp.len()]);
                let d = m.vertices()[c] - m.vertices()[a];
                let key = (a.min(c), a.max(c));
                let e = m
                    .edges()
                    .iter()
                    .position(|e| e.verts == [key.0, key.1])
                    .unwrap();
                let t = m.edges()[e].tri[0];
                circ += h.0[t].dot(&d);
            }
            best = best.max(circ.abs());
        }
        assert!(best > 0.1, "no circulation: {best}");
    }

    #[test]
    fn torus_basis_orthonormal() {
        let m = generate_mesh(&MeshKind::Torus {
            n_theta: 10,
            n_phi: 10,
        })
        .unwrap();
        let b = harmonic_basis(&m, 42).unwrap();
        assert_eq!(b.dim(), 2);
        assert!(b.gram_residual() < 1e-10);
        // Orthogonal to both other components.
        let projector = HodgeProjector::new(&m, 1e-12);
        for h in &b.fields {
            let psi = projector.rot_potential(&m, h).unwrap();
            let q = projector.grad_potential(&m, h).unwrap();
            assert!(norm_vec(&m, &crate::fem::rot_p1(&m, &psi)) < 1e-9);
            assert!(norm_vec(&m, &grad_cr(&m, &q)) < 1e-9);
        }
    }

    #[test]
    fn decompose_pure_gradient() {
        let m = generate_mesh(&MeshKind::Torus {
            n_theta: 8,
            n_phi: 8,
        })
        .unwrap();
        let b = harmonic_basis(&m, 1).unwrap();
        // Random zero-mean CR potential.
        let mut q = FieldCR(
            (0..m.num_edges())
                .map(|e| ((e * 131 % 17) as f64 - 8.0) / 10.0)
                .collect(),
        );
        let w = fem::cr_weights(&m);
        let mean = crate::linalg::dot(&w, &q.0) / m.total_area();
        for v in &mut q.0 {
            *v -= mean;
        }
        let x = grad_cr(&m, &q);
        let c = hodge_decompose(&m, &b, &x).unwrap();
        assert!(norm_vec(&m, &crate::fem::rot_p1(&m, &c.psi)) < 1e-8 * norm_vec(&m, &x));
        for h in &c.h_coeffs {
            assert!(h.abs() < 1e-8 * norm_vec(&m, &x));
        }
        assert!(c.residual < 1e-8 * norm_vec(&m, &x));
        // The recovered potential matches up to the (zero-mean) gauge.
        for (a, bq) in c.q.0.iter().zip(&q.0) {
            assert_relative_eq!(*a, *bq, epsilon = 1e-7);
        }
    }

    #[test]
    fn decompose_basis_field_is_idempotent() {
        let m = generate_mesh(&MeshKind::Torus {
            n_theta: 8,
            n_phi: 8,
        })
        .unwrap();
        let b = harmonic_basis(&m, 9).unwrap();
        let c = hodge_decompose(&m, &b, &b.fields[0]).unwrap();
        assert!(c.residual < 1e-8);
        assert_relative_eq!(c.h_coeffs[0], 1.0, epsilon = 1e-9);
        assert!(c.h_coeffs[1].abs() < 1e-9);
    }

    #[test]
    fn decompose_random_pythagoras() {
        let m = generate_mesh(&MeshKind::Torus {
            n_theta: 8,
            n_phi: 8,
        })
        .unwrap();
        let b = harmonic_basis(&m, 5).unwrap();
        let x = random_tangential_field(&m, 77, 0);
        let c = hodge_decompose(&m, &b, &x).unwrap();
        let nx2 = inner_vec(&m, &x, &x);
        let rot = crate::fem::rot_p1(&m, &c.psi);
        let grad = grad_cr(&m, &c.q);
        let sum = inner_vec(&m, &rot, &rot)
            + inner_vec(&m, &grad, &grad)
            + c.h_coeffs.iter().map(|h| h * h).sum::<f64>();
        assert_relative_eq!(nx2, sum, max_relative = 1e-8);
        assert!(c.residual <= 1e-8 * nx2.sqrt());
    }

    #[test]
    fn seed_independence_of_span() {
        let m = generate_mesh(&MeshKind::Torus {
            n_theta: 8,
            n_phi: 8,
        })
        .unwrap();
        let b1 = harmonic_basis(&m, 1).unwrap();
        let b2 = harmonic_basis(&m, 2).unwrap();
        for h in &b2.fields {
            let c = hodge_decompose(&m, &b1, h).unwrap();
            let rot = crate::fem::rot_p1(&m, &c.psi);
            let grad = grad_cr(&m, &c.q);
            assert!(norm_vec(&m, &rot) < 1e-8);
            assert!(norm_vec(&m, &grad) < 1e-8);
            assert!(c.residual < 1e-8);
        }
    }

    #[test]
    fn determinism_for_fixed_seed() {
        let m = generate_mesh(&MeshKind::Torus {
            n_theta: 6,
            n_phi: 6,
        })
        .unwrap();
        let b1 = harmonic_basis(&m, 123).unwrap();
        let b2 = harmonic_basis(&m, 123).unwrap();
        for (f1, f2) in b1.fields.iter().zip(&b2.fields) {
            for (a, b) in f1.0.iter().zip(&f2.0) {
                assert_eq!(a, b);
            }
        }
    }
}
