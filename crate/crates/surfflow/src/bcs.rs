//! Mixed boundary conditions: patch partitions, the normal-velocity lifting
//! potential, patched streamfunction/vorticity/pressure spaces, the mixed
//! harmonic space, and the outlet stabilization used by the channel runs.
//!
//! The boundary is partitioned twice, into dM_p | dM_N (pressure vs normal
//! velocity data) and independently into dM_omega | dM_T (vorticity vs
//! tangential velocity data). The velocity splits as
//! V = grad(q) + rot(psi~) + H~ with the lifting potential q solving a
//! Laplace problem with Neumann data g_N, psi~ vanishing on dM_N vertices,
//! and H~ in the mixed harmonic space.

use crate::error::{Error, Result};
use crate::fem::{self, DofSpace, FieldCR, FieldP0Vec, FieldP1, SpaceSolver};
use crate::hodge::{self, HarmonicBasis, HodgeProjector};
use crate::linalg::SparseMatrix;
use crate::mesh::{BoundaryEdge, SurfaceMesh};
use crate::stepper::{momentum_source_raw, CurvatureMode, FlowState, SimConfig};

/// Pressure-versus-normal-velocity side of the partition, per boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnLabel {
    Pressure,
    NormalVelocity,
}

/// Vorticity-versus-tangential side of the partition, per boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WtLabel {
    Vorticity,
    Tangential,
}

/// Per-boundary-edge labels, parallel to `mesh.boundary_edges()`.
#[derive(Debug, Clone)]
pub struct BoundaryPatchLabels {
    pub pn: Vec<PnLabel>,
    pub wt: Vec<WtLabel>,
}

impl BoundaryPatchLabels {
    /// Whole boundary carries normal-velocity and tangential data; with zero
    /// data this is the homogeneous setting.
    pub fn homogeneous(mesh: &SurfaceMesh) -> Self {
        let n = mesh.boundary_edges().len();
        BoundaryPatchLabels {
            pn: vec![PnLabel::NormalVelocity; n],
            wt: vec![WtLabel::Tangential; n],
        }
    }

    pub fn pressure_is_empty(&self) -> bool {
        self.pn.iter().all(|l| *l == PnLabel::NormalVelocity)
    }

    pub fn normal_velocity_is_empty(&self) -> bool {
        self.pn.iter().all(|l| *l == PnLabel::Pressure)
    }

    pub fn vorticity_is_empty(&self) -> bool {
        self.wt.iter().all(|l| *l == WtLabel::Tangential)
    }

    /// Vertices touched by at least one edge of the given pressure-side label.
    fn pn_vertices(&self, mesh: &SurfaceMesh, bedges: &[BoundaryEdge], which: PnLabel) -> Vec<bool> {
        let mut mask = vec![false; mesh.num_vertices()];
        for (be, l) in bedges.iter().zip(&self.pn) {
            if *l == which {
                mask[be.from] = true;
                mask[be.to] = true;
            }
        }
        mask
    }

    /// Indices into `boundary_edges` of the stabilized outlet: edges carrying
    /// both pressure and tangential data.
    pub fn outlet_edges(&self) -> Vec<usize> {
        self.pn
            .iter()
            .zip(&self.wt)
            .enumerate()
            .filter(|(_, (p, w))| **p == PnLabel::Pressure && **w == WtLabel::Tangential)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Boundary data samples, one per boundary edge (evaluated at midpoints);
/// entries outside the matching patch are ignored.
#[derive(Debug, Clone, Default)]
pub struct BoundaryData {
    /// Normal velocity, outward-positive, on normal-velocity edges.
    pub g_n: Vec<f64>,
    /// Pressure on pressure edges.
    pub g_p: Vec<f64>,
    /// Vorticity on vorticity edges.
    pub g_omega: Vec<f64>,
    /// Tangential velocity on tangential edges.
    pub g_t: Vec<f64>,
}

impl BoundaryData {
    pub fn zero(mesh: &SurfaceMesh) -> Self {
        let n = mesh.boundary_edges().len();
        BoundaryData {
            g_n: vec![0.0; n],
            g_p: vec![0.0; n],
            g_omega: vec![0.0; n],
            g_t: vec![0.0; n],
        }
    }
}

/// Dof spaces of the patched scalar unknowns: S for the streamfunction,
/// W for the vorticity, Q for the pressure.
#[derive(Debug, Clone)]
pub struct PatchedSpaces {
    pub s: DofSpace,
    pub w: DofSpace,
    pub q: DofSpace,
}

/// Masks and spaces derived from a patch labeling. Dirichlet conditions on
/// scalar unknowns follow the patches: psi on dM_N vertices, omega on
/// dM_omega vertices, pressure on dM_p CR dofs. An empty patch falls back to
/// the zero-mean constraint, except for the vorticity space whose mass
/// system needs no gauge on bounded domains.
pub fn patched_spaces(mesh: &SurfaceMesh, patches: &BoundaryPatchLabels) -> PatchedSpaces {
    let bedges = mesh.boundary_edges();
    assert_eq!(bedges.len(), patches.pn.len());
    assert_eq!(bedges.len(), patches.wt.len());
    let nv = mesh.num_vertices();
    let ne = mesh.num_edges();

    let s = if patches.normal_velocity_is_empty() {
        DofSpace::ZeroMean {
            weights: fem::lumped_p1_weights(mesh),
        }
    } else {
        let dir = patches.pn_vertices(mesh, &bedges, PnLabel::NormalVelocity);
        DofSpace::Restricted {
            free: (0..nv).filter(|&v| !dir[v]).collect(),
            full_dim: nv,
        }
    };

    let w = if patches.vorticity_is_empty() {
        if mesh.is_closed() {
            DofSpace::ZeroMean {
                weights: fem::lumped_p1_weights(mesh),
            }
        } else {
            DofSpace::Restricted {
                free: (0..nv).collect(),
                full_dim: nv,
            }
        }
    } else {
        let mut dir = vec![false; nv];
        for (be, l) in bedges.iter().zip(&patches.wt) {
            if *l == WtLabel::Vorticity {
                dir[be.from] = true;
                dir[be.to] = true;
            }
        }
        DofSpace::Restricted {
            free: (0..nv).filter(|&v| !dir[v]).collect(),
            full_dim: nv,
        }
    };

    let q = if patches.pressure_is_empty() {
        DofSpace::cr_zero_mean(mesh)
    } else {
        let mut dir = vec![false; ne];
        for (be, l) in bedges.iter().zip(&patches.pn) {
            if *l == PnLabel::Pressure {
                dir[be.edge] = true;
            }
        }
        DofSpace::Restricted {
            free: (0..ne).filter(|&e| !dir[e]).collect(),
            full_dim: ne,
        }
    };

    PatchedSpaces { s, w, q }
}

/// Solve the Laplace problem for the lifting potential q: Dirichlet 0 on
/// pressure-patch vertices, weak Neumann data g_N on normal-velocity edges.
/// Returns the potential and its elementwise gradient (the lifting).
pub fn build_lifting(
    mesh: &SurfaceMesh,
    patches: &BoundaryPatchLabels,
    g_n: &[f64],
) -> Result<(FieldP1, FieldP0Vec)> {
    let bedges = mesh.boundary_edges();
    assert_eq!(bedges.len(), g_n.len());
    if patches.pressure_is_empty() {
        // Pure Neumann problem: data must be compatible.
        let flux: f64 = bedges
            .iter()
            .zip(&patches.pn)
            .zip(g_n)
            .filter(|((_, l), _)| **l == PnLabel::NormalVelocity)
            .map(|((be, _), g)| g * be.length(mesh))
            .sum();
        if flux.abs() > 1e-10 {
            return Err(Error::InconsistentNeumannData(flux));
        }
    }

    let mut b = vec![0.0; mesh.num_vertices()];
    for ((be, l), g) in bedges.iter().zip(&patches.pn).zip(g_n) {
        if *l == PnLabel::NormalVelocity {
            let w = 0.5 * g * be.length(mesh);
            b[be.from] += w;
            b[be.to] += w;
        }
    }

    let space = if patches.pressure_is_empty() {
        DofSpace::ZeroMean {
            weights: fem::lumped_p1_weights(mesh),
        }
    } else {
        let dir = patches.pn_vertices(mesh, &bedges, PnLabel::Pressure);
        DofSpace::Restricted {
            free: (0..mesh.num_vertices()).filter(|&v| !dir[v]).collect(),
            full_dim: mesh.num_vertices(),
        }
    };
    let solver = SpaceSolver::new(space, fem::stiffness_p1(mesh), 1e-12);
    let x0 = vec![0.0; mesh.num_vertices()];
    let (q, _) = solver.solve(&b, &x0)?;
    let potential = FieldP1(q);
    let lifting = fem::grad_p1(mesh, &potential);
    Ok((potential, lifting))
}

/// Full mixed boundary setup: labels, data, lifting, and the psi mask.
#[derive(Debug, Clone)]
pub struct MixedBcSetup {
    pub patches: BoundaryPatchLabels,
    pub data: BoundaryData,
    pub potential: FieldP1,
    pub lifting: FieldP0Vec,
    /// Vertices constrained to zero in the patched streamfunction space.
    pub psi_space_mask: Vec<bool>,
}

impl MixedBcSetup {
    pub fn build(
        mesh: &SurfaceMesh,
        patches: BoundaryPatchLabels,
        data: BoundaryData,
    ) -> Result<Self> {
        let (potential, lifting) = build_lifting(mesh, &patches, &data.g_n)?;
        let bedges = mesh.boundary_edges();
        let mut psi_space_mask = vec![false; mesh.num_vertices()];
        for (be, l) in bedges.iter().zip(&patches.pn) {
            if *l == PnLabel::NormalVelocity {
                psi_space_mask[be.from] = true;
                psi_space_mask[be.to] = true;
            }
        }
        Ok(MixedBcSetup {
            patches,
            data,
            potential,
            lifting,
            psi_space_mask,
        })
    }
}

/// Dimension of the mixed harmonic space: the orthogonal complement of
/// grad(patched Q) + rot(patched S) inside the 2T-dimensional tangential
/// field space. Both summand operators are injective on their dof spaces.
pub fn mixed_harmonic_dimension(mesh: &SurfaceMesh, patches: &BoundaryPatchLabels) -> usize {
    let spaces = patched_spaces(mesh, patches);
    2 * mesh.num_triangles() - spaces.q.dim() - spaces.s.dim()
}

/// Orthonormal basis of the mixed harmonic space, built by the same
/// random-projection algorithm with patched solve spaces.
pub fn mixed_harmonic_basis(
    mesh: &SurfaceMesh,
    patches: &BoundaryPatchLabels,
    seed: u64,
) -> Result<HarmonicBasis> {
    let spaces = patched_spaces(mesh, patches);
    let projector = HodgeProjector::with_spaces(mesh, spaces.s, spaces.q, 1e-12);
    let dim = mixed_harmonic_dimension(mesh, patches);
    hodge::harmonic_basis_with(mesh, &projector, dim, seed)
}

/// Symmetric positive semi-definite stabilization beta h_K^2 (grad, grad)
/// restricted to triangles touching the outlet (pressure + tangential)
/// boundary edges. Added to the vorticity system to damp the oscillations
/// caused by forcing the tangential velocity to zero across the outlet.
pub fn outlet_stabilization(
    mesh: &SurfaceMesh,
    patches: &BoundaryPatchLabels,
    beta: f64,
) -> SparseMatrix {
    let bedges = mesh.boundary_edges();
    let mut outlet_vertex = vec![false; mesh.num_vertices()];
    for idx in patches.outlet_edges() {
        outlet_vertex[bedges[idx].from] = true;
        outlet_vertex[bedges[idx].to] = true;
    }
    let mut triplets = Vec::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if !tri.iter().any(|&v| outlet_vertex[v]) {
            continue;
        }
        let h = mesh.elem_diameter(t);
        let scale = beta * h * h * mesh.elem_area()[t];
        let grads = &mesh.hat_gradients()[t];
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((tri[i], tri[j], scale * grads[i].dot(&grads[j])));
            }
        }
    }
    SparseMatrix::assemble(&triplets, mesh.num_vertices(), mesh.num_vertices())
        .expect("valid stabilization triplets")
}

/// Stepper for the mixed-boundary Navier-Stokes system. The scheme is the
/// homogeneous explicit Euler scheme with patched spaces, the static lifting
/// added to the velocity, the kinetic boundary term on the pressure patch,
/// and the stabilized vorticity system.
pub struct MixedFlowSolver<'a> {
    pub mesh: &'a SurfaceMesh,
    pub basis: &'a HarmonicBasis,
    pub setup: MixedBcSetup,
    pub config: SimConfig,
    mass: SparseMatrix,
    s_solver: SpaceSolver,
    q_solver: SpaceSolver,
    w_solver: SpaceSolver,
    omega_dirichlet: Vec<f64>,
    g_t_load: Vec<f64>,
    curvature: FieldP1,
    force: FieldP0Vec,
}

impl<'a> MixedFlowSolver<'a> {
    pub fn new(
        mesh: &'a SurfaceMesh,
        basis: &'a HarmonicBasis,
        setup: MixedBcSetup,
        config: SimConfig,
        stab_beta: f64,
    ) -> Result<Self> {
        let spaces = patched_spaces(mesh, &setup.patches);
        let tol = config.solver_tol;
        let mass = fem::mass_p1(mesh);
        let stab = outlet_stabilization(mesh, &setup.patches, stab_beta);
        let omega_system = mass.add(&stab);

        let bedges = mesh.boundary_edges();
        // Dirichlet vorticity values: edge samples averaged onto vertices.
        let mut omega_dirichlet = vec![0.0; mesh.num_vertices()];
        let mut counts = vec![0usize; mesh.num_vertices()];
        for ((be, l), g) in bedges.iter().zip(&setup.patches.wt).zip(&setup.data.g_omega) {
            if *l == WtLabel::Vorticity {
                for v in [be.from, be.to] {
                    omega_dirichlet[v] += g;
                    counts[v] += 1;
                }
            }
        }
        for (v, c) in counts.iter().enumerate() {
            if *c > 0 {
                omega_dirichlet[v] /= *c as f64;
            }
        }
        // Boundary load (g_T, chi) on the tangential patch.
        let mut g_t_load = vec![0.0; mesh.num_vertices()];
        for ((be, l), g) in bedges.iter().zip(&setup.patches.wt).zip(&setup.data.g_t) {
            if *l == WtLabel::Tangential {
                let w = 0.5 * g * be.length(mesh);
                g_t_load[be.from] += w;
                g_t_load[be.to] += w;
            }
        }

        let curvature = match config.curvature_mode {
            CurvatureMode::AngleDefect => mesh.gaussian_curvature_p1(),
            CurvatureMode::Zero => FieldP1::zeros(mesh),
            CurvatureMode::Constant(c) => FieldP1(vec![c; mesh.num_vertices()]),
        };
        let force = match &config.force {
            crate::stepper::Force::Zero => FieldP0Vec::zeros(mesh),
            crate::stepper::Force::ConstantAmbient(v) => {
                let v = *v;
                FieldP0Vec::project_ambient(mesh, |_| v)
            }
            crate::stepper::Force::PerElement(f) => f.clone(),
        };

        Ok(MixedFlowSolver {
            mesh,
            basis,
            setup,
            config,
            s_solver: SpaceSolver::new(spaces.s, fem::stiffness_p1(mesh), tol),
            q_solver: SpaceSolver::new(spaces.q, fem::stiffness_cr(mesh), tol),
            w_solver: SpaceSolver::new(spaces.w, omega_system, tol),
            mass,
            omega_dirichlet,
            g_t_load,
            curvature,
            force,
        })
    }

    /// Total velocity: lifting + rot(psi~) + harmonic part.
    pub fn velocity(&self, state: &FlowState) -> FieldP0Vec {
        let mut v = fem::rot_p1(self.mesh, &state.psi);
        let h = self.basis.combine(self.mesh, &state.h_coeffs);
        for ((a, b), l) in v.0.iter_mut().zip(&h.0).zip(&self.setup.lifting.0) {
            *a += *b + *l;
        }
        v
    }

    /// Solve the (stabilized) vorticity system for the given velocity.
    fn solve_vorticity(&self, v: &FieldP0Vec, warm: &FieldP1) -> Result<FieldP1> {
        let mut b = fem::rot_load_p1(self.mesh, v);
        for (bi, g) in b.iter_mut().zip(&self.g_t_load) {
            *bi += g;
        }
        // Shift by the Dirichlet lift so the restricted solve sees zeros.
        let lift_term = self.w_solver.matrix().matvec(&self.omega_dirichlet);
        for (bi, l) in b.iter_mut().zip(&lift_term) {
            *bi -= l;
        }
        let (mut omega, _) = self.w_solver.solve(&b, &warm.0)?;
        for (o, d) in omega.iter_mut().zip(&self.omega_dirichlet) {
            *o += d;
        }
        Ok(FieldP1(omega))
    }

    /// Initialize from rest: the velocity is the lifting alone.
    pub fn init_impulsive(&self) -> Result<FlowState> {
        self.init_from_velocity(&self.setup.lifting)
    }

    /// Initialize from a velocity field: mixed Hodge decomposition of the
    /// remainder after subtracting the lifting, then the vorticity solve.
    pub fn init_from_velocity(&self, v0: &FieldP0Vec) -> Result<FlowState> {
        let rem = FieldP0Vec(
            v0.0.iter()
                .zip(&self.setup.lifting.0)
                .map(|(a, l)| a - l)
                .collect(),
        );
        let projector = HodgeProjector::with_spaces(
            self.mesh,
            self.s_solver.space().clone(),
            self.q_solver.space().clone(),
            self.config.solver_tol,
        );
        let psi = projector.rot_potential(self.mesh, &rem)?;
        let h_coeffs = self.basis.coefficients(self.mesh, &rem);
        let state = FlowState {
            psi,
            h_coeffs,
            omega: FieldP1::zeros(self.mesh),
            time: 0.0,
        };
        let v = self.velocity(&state);
        let omega = self.solve_vorticity(&v, &state.omega)?;
        Ok(FlowState { omega, ..state })
    }

    /// Kinetic boundary term (|V|^2 / 2, <W, N>) over the pressure patch,
    /// midpoint quadrature, for W = rot(hat_i) (returned as a P1 load) and
    /// for the harmonic basis fields (returned as coefficients).
    fn pressure_boundary_terms(&self, v: &FieldP0Vec) -> (Vec<f64>, Vec<f64>) {
        let mut load = vec![0.0; self.mesh.num_vertices()];
        let mut hterm = vec![0.0; self.basis.dim()];
        let bedges = self.mesh.boundary_edges();
        for (be, l) in bedges.iter().zip(&self.setup.patches.pn) {
            if *l != PnLabel::Pressure {
                continue;
            }
            let t = be.tri;
            let n = self.mesh.boundary_conormal(be);
            let w = 0.5 * v.0[t].norm_squared() * be.length(self.mesh);
            let nrm = self.mesh.elem_normal()[t];
            let tri = self.mesh.triangles()[t];
            let grads = &self.mesh.hat_gradients()[t];
            for i in 0..3 {
                // rot(hat_i) = -N x grad(hat_i).
                let rot_hat = -nrm.cross(&grads[i]);
                load[tri[i]] += w * rot_hat.dot(&n);
            }
            for (k, h) in self.basis.fields.iter().enumerate() {
                hterm[k] += w * h.0[t].dot(&n);
            }
        }
        (load, hterm)
    }

    /// One explicit step of the mixed Navier-Stokes system.
    pub fn ns_step(&self, state: &FlowState) -> Result<FlowState> {
        let dt = self.config.dt;
        let nu = self.config.nu;
        let v = self.velocity(state);
        let g = momentum_source_raw(
            self.mesh,
            &self.force,
            &self.curvature,
            nu,
            &state.omega,
            &v,
            true,
        );
        let (bnd_load, bnd_h) = self.pressure_boundary_terms(&v);

        // Step 1: streamfunction on the patched space.
        let m_omega = self.mass.matvec(&state.omega.0);
        let rot_g = fem::rot_load_p1(self.mesh, &g);
        let b: Vec<f64> = m_omega
            .iter()
            .zip(&rot_g)
            .zip(&bnd_load)
            .map(|((mo, rg), bl)| mo + dt * (rg + bl))
            .collect();
        if !b.iter().all(|v| v.is_finite()) {
            return Err(Error::BlowUp {
                time: state.time,
                step: (state.time / dt).round() as usize,
            });
        }
        let (psi_new, _) = self.s_solver.solve(&b, &state.psi.0)?;

        // Step 2: harmonic coefficients.
        let mut h_new = state.h_coeffs.clone();
        for (i, hfield) in self.basis.fields.iter().enumerate() {
            h_new[i] += dt * (fem::inner_vec(self.mesh, &g, hfield) + bnd_h[i]);
        }

        // Step 3: stabilized vorticity solve from the new velocity.
        let mid = FlowState {
            psi: FieldP1(psi_new),
            h_coeffs: h_new,
            omega: state.omega.clone(),
            time: state.time + dt,
        };
        let v_new = self.velocity(&mid);
        if !v_new.0.iter().all(|x| x.x.is_finite() && x.y.is_finite() && x.z.is_finite()) {
            return Err(Error::BlowUp {
                time: mid.time,
                step: (mid.time / dt).round() as usize,
            });
        }
        let omega_new = self.solve_vorticity(&v_new, &state.omega)?;
        let new = FlowState {
            omega: omega_new,
            ..mid
        };
        if !new.is_finite() {
            return Err(Error::BlowUp {
                time: new.time,
                step: (new.time / dt).round() as usize,
            });
        }
        Ok(new)
    }

    /// Recover the modified total pressure p~* in the patched CR space.
    pub fn recover_pressure(&self, state: &FlowState) -> Result<FieldCR> {
        let v = self.velocity(state);
        let g = momentum_source_raw(
            self.mesh,
            &self.force,
            &self.curvature,
            self.config.nu,
            &state.omega,
            &v,
            true,
        );
        let b = fem::grad_load_cr(self.mesh, &g);
        let x0 = vec![0.0; self.mesh.num_edges()];
        let (p, _) = self.q_solver.solve(&b, &x0)?;
        Ok(FieldCR(p))
    }

    pub fn kinetic_energy(&self, state: &FlowState) -> f64 {
        let v = self.velocity(state);
        0.5 * fem::inner_vec(self.mesh, &v, &v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hodge::{betti_dimension, harmonic_basis, hodge_decompose};
    use crate::mesh::{generate_mesh, MeshKind, Vec3};
    use crate::stepper::FlowSolver;
    use approx::assert_relative_eq;

    fn channel(nx: usize, ny: usize) -> SurfaceMesh {
        generate_mesh(&MeshKind::Rectangle {
            width: 2.2,
            height: 0.41,
            nx,
            ny,
        })
        .unwrap()
    }

    /// Outlet = pressure + tangential, rest normal-velocity + tangential.
    fn channel_labels(mesh: &SurfaceMesh) -> BoundaryPatchLabels {
        let bedges = mesh.boundary_edges();
        let pn = bedges
            .iter()
            .map(|be| {
                if be.midpoint(mesh).x >= 2.2 - 1e-9 {
                    PnLabel::Pressure
                } else {
                    PnLabel::NormalVelocity
                }
            })
            .collect();
        BoundaryPatchLabels {
            pn,
            wt: vec![WtLabel::Tangential; bedges.len()],
        }
    }

    fn inlet_g_n(mesh: &SurfaceMesh, profile: impl Fn(f64) -> f64) -> Vec<f64> {
        mesh.boundary_edges()
            .iter()
            .map(|be| {
                let m = be.midpoint(mesh);
                if m.x <= 1e-9 {
                    -profile(m.y)
                } else {
                    0.0
                }
            })
            .collect()
    }

    #[test]
    fn zero_data_zero_lifting() {
        let m = channel(11, 4);
        let labels = channel_labels(&m);
        let g = vec![0.0; m.boundary_edges().len()];
        let (q, lift) = build_lifting(&m, &labels, &g).unwrap();
        assert!(q.0.iter().all(|v| v.abs() < 1e-12));
        assert!(lift.0.iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn channel_linear_lifting() {
        let m = channel(22, 5);
        let labels = channel_labels(&m);
        let g = inlet_g_n(&m, |_| 1.0);
        let (q, lift) = build_lifting(&m, &labels, &g).unwrap();
        for (v, p) in q.0.iter().zip(m.vertices()) {
            assert_relative_eq!(*v, p.x - 2.2, epsilon = 1e-8);
        }
        for l in &lift.0 {
            assert!((l - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn parabolic_influx_matches_profile_integral() {
        // h ~ 1e-2 resolution.
        let m = channel(220, 41);
        let labels = channel_labels(&m);
        let vm = 1.5;
        let profile = move |y: f64| 4.0 * vm * y * (0.41 - y) / (0.41f64 * 0.41);
        let g = inlet_g_n(&m, profile);
        let (_, lift) = build_lifting(&m, &labels, &g).unwrap();
        let bedges = m.boundary_edges();
        // Influx from the data samples.
        let data_flux: f64 = bedges
            .iter()
            .zip(&g)
            .map(|(be, gi)| -gi * be.length(&m))
            .sum();
        // exact integral of the parabola: V_mean * height = 0.41.
        assert_relative_eq!(data_flux, 0.41, max_relative = 0.01);
        // Discrete flux of the lifting through the inlet matches the data.
        let lift_flux: f64 = bedges
            .iter()
            .zip(&g)
            .filter(|(_, gi)| gi.abs() > 0.0)
            .map(|(be, _)| {
                let n = m.boundary_conormal(be);
                -lift.0[be.tri].dot(&n) * be.length(&m)
            })
            .sum();
        assert_relative_eq!(lift_flux, data_flux, max_relative = 1e-6);
    }

    #[test]
    fn inconsistent_neumann_rejected() {
        let m = channel(11, 4);
        let labels = BoundaryPatchLabels::homogeneous(&m);
        let g = inlet_g_n(&m, |_| 1.0);
        match build_lifting(&m, &labels, &g) {
            Err(Error::InconsistentNeumannData(_)) => {}
            other => panic!("expected inconsistent Neumann error, got {other:?}"),
        }
    }

    #[test]
    fn lifting_orthogonal_to_patched_rotations() {
        let m = channel(22, 5);
        let labels = channel_labels(&m);
        let g = inlet_g_n(&m, |y| y * (0.41 - y));
        let (_, lift) = build_lifting(&m, &labels, &g).unwrap();
        let spaces = patched_spaces(&m, &labels);
        let free = spaces.s.free_dofs().unwrap();
        // Pseudo-random nodal values on the free psi dofs.
        let mut phi = FieldP1::zeros(&m);
        for (k, &i) in free.iter().enumerate() {
            phi.0[i] = ((k as f64) * 0.7371).sin();
        }
        let rot = fem::rot_p1(&m, &phi);
        let ip = fem::inner_vec(&m, &lift, &rot);
        let scale = fem::norm_vec(&m, &lift) * fem::norm_vec(&m, &rot);
        assert!(ip.abs() <= 1e-9 * scale.max(1.0), "{ip}");
    }

    #[test]
    fn homogeneous_labels_reproduce_s1_0() {
        let m = generate_mesh(&MeshKind::Annulus {
            r_inner: 0.5,
            r_outer: 1.0,
            n_radial: 3,
            n_angular: 12,
        })
        .unwrap();
        let labels = BoundaryPatchLabels::homogeneous(&m);
        let spaces = patched_spaces(&m, &labels);
        assert_eq!(
            spaces.s.free_dofs().unwrap(),
            DofSpace::s1_0(&m).free_dofs().unwrap()
        );
        assert!(matches!(spaces.q, DofSpace::ZeroMean { .. }));
    }

    #[test]
    fn closed_surface_spaces_zero_mean() {
        let m = generate_mesh(&MeshKind::Torus {
            n_theta: 6,
            n_phi: 6,
        })
        .unwrap();
        let labels = BoundaryPatchLabels::homogeneous(&m);
        let spaces = patched_spaces(&m, &labels);
        assert!(matches!(spaces.s, DofSpace::ZeroMean { .. }));
        assert!(matches!(spaces.w, DofSpace::ZeroMean { .. }));
        assert!(matches!(spaces.q, DofSpace::ZeroMean { .. }));
    }

    #[test]
    fn mixed_dimension_matches_betti_in_homogeneous_limit() {
        for kind in [
            MeshKind::Rectangle {
                width: 1.0,
                height: 1.0,
                nx: 4,
                ny: 4,
            },
            MeshKind::Annulus {
                r_inner: 0.5,
                r_outer: 1.0,
                n_radial: 3,
                n_angular: 10,
            },
            MeshKind::Torus {
                n_theta: 6,
                n_phi: 6,
            },
        ] {
            let m = generate_mesh(&kind).unwrap();
            let labels = BoundaryPatchLabels::homogeneous(&m);
            assert_eq!(mixed_harmonic_dimension(&m, &labels), betti_dimension(&m));
        }
    }

    #[test]
    fn disk_half_and_half_dimension_zero() {
        let m = generate_mesh(&MeshKind::Rectangle {
            width: 1.0,
            height: 1.0,
            nx: 6,
            ny: 6,
        })
        .unwrap();
        let bedges = m.boundary_edges();
        let pn: Vec<PnLabel> = bedges
            .iter()
            .map(|be| {
                if be.midpoint(&m).x < 0.5 {
                    PnLabel::Pressure
                } else {
                    PnLabel::NormalVelocity
                }
            })
            .collect();
        let labels = BoundaryPatchLabels {
            pn,
            wt: vec![WtLabel::Tangential; bedges.len()],
        };
        assert_eq!(mixed_harmonic_dimension(&m, &labels), 0);
        let basis = mixed_harmonic_basis(&m, &labels, 7).unwrap();
        assert_eq!(basis.dim(), 0);
    }

    #[test]
    fn channel_outlet_harmonic_dimension() {
        // Simply connected channel with one pressure arc: the dofs freed in
        // the psi space and the dofs constrained in the CR space cancel
        // exactly, so the mixed harmonic complement is empty. Through-flow
        // is carried entirely by the lifting.
        let m = channel(11, 4);
        let labels = channel_labels(&m);
        assert_eq!(mixed_harmonic_dimension(&m, &labels), 0);
        let basis = mixed_harmonic_basis(&m, &labels, 3).unwrap();
        assert_eq!(basis.dim(), 0);
    }

    #[test]
    fn outlet_vertices_free_in_psi_space() {
        let m = channel(22, 5);
        let labels = channel_labels(&m);
        let spaces = patched_spaces(&m, &labels);
        let free = spaces.s.free_dofs().unwrap();
        for (i, p) in m.vertices().iter().enumerate() {
            if (p.x - 2.2).abs() < 1e-9 && p.y > 1e-9 && p.y < 0.41 - 1e-9 {
                assert!(free.contains(&i), "outlet vertex {i} constrained");
            }
        }
    }

    #[test]
    fn mixed_basis_homogeneous_limit_spans_harmonics() {
        let m = generate_mesh(&MeshKind::Annulus {
            r_inner: 0.5,
            r_outer: 1.0,
            n_radial: 3,
            n_angular: 14,
        })
        .unwrap();
        let labels = BoundaryPatchLabels::homogeneous(&m);
        let hom = harmonic_basis(&m, 11).unwrap();
        let mix = mixed_harmonic_basis(&m, &labels, 99).unwrap();
        assert_eq!(hom.dim(), mix.dim());
        for f in &hom.fields {
            let c = mix.coefficients(&m, f);
            let rec = mix.combine(&m, &c);
            let diff = FieldP0Vec(f.0.iter().zip(&rec.0).map(|(a, b)| a - b).collect());
            assert!(fem::norm_vec(&m, &diff) <= 1e-8);
        }
    }

    #[test]
    fn stabilization_zero_without_outlet() {
        let m = channel(11, 4);
        let labels = BoundaryPatchLabels::homogeneous(&m);
        let s = outlet_stabilization(&m, &labels, 1.0);
        let x = vec![1.0; m.num_vertices()];
        assert!(s.matvec(&x).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn stabilization_is_psd_and_local() {
        let m = channel(22, 5);
        let labels = channel_labels(&m);
        let s = outlet_stabilization(&m, &labels, 1.0);
        assert!(s.is_symmetric(1e-12));
        let mut rng_state = 0x12345u64;
        for _ in 0..100 {
            let x: Vec<f64> = (0..m.num_vertices())
                .map(|_| {
                    rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    ((rng_state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
                })
                .collect();
            assert!(crate::linalg::dot(&x, &s.matvec(&x)) >= -1e-12);
        }
        // Supported only within one element layer of the outlet.
        for (i, p) in m.vertices().iter().enumerate() {
            if p.x < 2.2 - 2.0 * (2.2 / 22.0) - 1e-9 {
                let mut e = vec![0.0; m.num_vertices()];
                e[i] = 1.0;
                assert!(s.matvec(&e).iter().all(|v| v.abs() < 1e-15));
            }
        }
    }

    #[test]
    fn stabilization_h2_trend() {
        let energy = |nx: usize, ny: usize| {
            let m = channel(nx, ny);
            let labels = channel_labels(&m);
            let s = outlet_stabilization(&m, &labels, 1.0);
            let x: Vec<f64> = m.vertices().iter().map(|p| (p.x + 2.0 * p.y).sin()).collect();
            crate::linalg::dot(&x, &s.matvec(&x))
        };
        let e1 = energy(22, 5);
        let e2 = energy(44, 10);
        let e3 = energy(88, 20);
        assert!(e2 / e1 < 0.3, "{e1} {e2}");
        assert!(e3 / e2 < 0.3, "{e2} {e3}");
    }

    #[test]
    fn homogeneous_limit_matches_plain_stepper() {
        let m = generate_mesh(&MeshKind::Annulus {
            r_inner: 0.5,
            r_outer: 1.0,
            n_radial: 4,
            n_angular: 16,
        })
        .unwrap();
        let basis = harmonic_basis(&m, 5).unwrap();
        let config = SimConfig {
            nu: 0.01,
            dt: 1e-3,
            solver_tol: 1e-13,
            ..Default::default()
        };
        let labels = BoundaryPatchLabels::homogeneous(&m);
        let setup = MixedBcSetup::build(&m, labels, BoundaryData::zero(&m)).unwrap();
        let mixed = MixedFlowSolver::new(&m, &basis, setup, config.clone(), 1.0).unwrap();
        let plain = FlowSolver::new(&m, &basis, config);

        let v0 = FieldP0Vec::project_ambient(&m, |p| Vec3::new(-p.y, p.x, 0.0) * 0.3);
        let mut sa = plain.ns_init(&v0).unwrap();
        let mut sb = mixed.init_from_velocity(&v0).unwrap();
        for _ in 0..10 {
            sa = plain.ns_step(&sa).unwrap();
            sb = mixed.ns_step(&sb).unwrap();
        }
        for (a, b) in sa.psi.0.iter().zip(&sb.psi.0) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        for (a, b) in sa.h_coeffs.iter().zip(&sb.h_coeffs) {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in sa.omega.0.iter().zip(&sb.omega.0) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_and_plain_decompose_agree_homogeneously() {
        let m = generate_mesh(&MeshKind::Annulus {
            r_inner: 0.5,
            r_outer: 1.0,
            n_radial: 3,
            n_angular: 12,
        })
        .unwrap();
        let basis = harmonic_basis(&m, 2).unwrap();
        let x = FieldP0Vec::project_ambient(&m, |p| Vec3::new(p.y * p.y, -p.x, 0.1));
        let hom = hodge_decompose(&m, &basis, &x).unwrap();
        let labels = BoundaryPatchLabels::homogeneous(&m);
        let setup = MixedBcSetup::build(&m, labels, BoundaryData::zero(&m)).unwrap();
        let mixed = MixedFlowSolver::new(&m, &basis, setup, SimConfig::default(), 1.0).unwrap();
        let s = mixed.init_from_velocity(&x).unwrap();
        for (a, b) in s.psi.0.iter().zip(&hom.psi.0) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
