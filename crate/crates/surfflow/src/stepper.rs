//! Explicit Euler time stepping for the fully discrete Navier-Stokes and
//! Euler systems, plus a-posteriori pressure recovery.
//!
//! Navier-Stokes step (t_n -> t_{n+1}), with
//! R(W) = (F - omega J V - nu rot omega + 2 nu kappa V, W):
//!   1. (rot psi', rot phi) = (omega, phi) + dt R(rot phi)   for phi in S_h
//!   2. h'_i = h_i + dt R(H_i)                                (orthonormal basis)
//!   3. (omega', chi) = (V', rot chi)                         for chi in W_h
//!
//! Euler step:
//!   1. (omega', chi) = (omega, chi) + dt (curl F - <V, grad omega>, chi)
//!   2. h'_i = h_i + dt (F - omega J V, H_i)
//!   3. (rot psi', rot phi) = (omega', phi)

use crate::error::{Error, Result};
use crate::fem::{self, DofSpace, FieldCR, FieldP0Vec, FieldP1, SpaceSolver};
use crate::hodge::HarmonicBasis;
use crate::linalg::{self, Precond, SparseMatrix};
use crate::mesh::{SurfaceMesh, Vec3};

/// Discrete curvature source for the viscous curvature term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurvatureMode {
    /// Angle defect over one third of the incident area.
    AngleDefect,
    Zero,
    Constant(f64),
}

/// External force specification.
#[derive(Debug, Clone)]
pub enum Force {
    Zero,
    /// Ambient constant vector, projected onto each tangent plane.
    ConstantAmbient(Vec3),
    /// Fixed per-element tangential samples.
    PerElement(FieldP0Vec),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Viscosity; zero selects the Euler algorithm.
    pub nu: f64,
    pub dt: f64,
    pub t_end: f64,
    pub force: Force,
    pub curvature_mode: CurvatureMode,
    pub solver_tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            nu: 0.0,
            dt: 1e-3,
            t_end: 1.0,
            force: Force::Zero,
            curvature_mode: CurvatureMode::AngleDefect,
            solver_tol: 1e-10,
        }
    }
}

/// The full unknown of either scheme: streamfunction, harmonic coefficients,
/// vorticity, and simulation time.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub psi: FieldP1,
    pub h_coeffs: Vec<f64>,
    pub omega: FieldP1,
    pub time: f64,
}

impl FlowState {
    pub fn zero(mesh: &SurfaceMesh, basis: &HarmonicBasis) -> Self {
        FlowState {
            psi: FieldP1::zeros(mesh),
            h_coeffs: vec![0.0; basis.dim()],
            omega: FieldP1::zeros(mesh),
            time: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.psi.0.iter().all(|v| v.is_finite())
            && self.h_coeffs.iter().all(|v| v.is_finite())
            && self.omega.0.iter().all(|v| v.is_finite())
    }
}

/// Precomputed operators for stepping on a fixed mesh/basis/config.
pub struct FlowSolver<'a> {
    pub mesh: &'a SurfaceMesh,
    pub basis: &'a HarmonicBasis,
    pub config: SimConfig,
    mass: SparseMatrix,
    s_solver: SpaceSolver,
    q_solver: SpaceSolver,
    curvature: FieldP1,
    force: FieldP0Vec,
    warned_dt: std::cell::Cell<bool>,
}

impl<'a> FlowSolver<'a> {
    pub fn new(mesh: &'a SurfaceMesh, basis: &'a HarmonicBasis, config: SimConfig) -> Self {
        let curvature = match config.curvature_mode {
            CurvatureMode::AngleDefect => mesh.gaussian_curvature_p1(),
            CurvatureMode::Zero => FieldP1::zeros(mesh),
            CurvatureMode::Constant(c) => FieldP1(vec![c; mesh.num_vertices()]),
        };
        let force = match &config.force {
            Force::Zero => FieldP0Vec::zeros(mesh),
            Force::ConstantAmbient(v) => {
                let v = *v;
                FieldP0Vec::project_ambient(mesh, |_| v)
            }
            Force::PerElement(f) => {
                assert_eq!(f.0.len(), mesh.num_triangles());
                f.clone()
            }
        };
        let tol = config.solver_tol;
        FlowSolver {
            mesh,
            basis,
            config,
            mass: fem::mass_p1(mesh),
            s_solver: SpaceSolver::new(DofSpace::s1_0(mesh), fem::stiffness_p1(mesh), tol),
            q_solver: SpaceSolver::new(DofSpace::cr_zero_mean(mesh), fem::stiffness_cr(mesh), tol),
            curvature,
            force,
            warned_dt: std::cell::Cell::new(false),
        }
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.mass
    }

    pub fn streamfunction_solver(&self) -> &SpaceSolver {
        &self.s_solver
    }

    pub fn force(&self) -> &FieldP0Vec {
        &self.force
    }

    pub fn curvature(&self) -> &FieldP1 {
        &self.curvature
    }

    /// V_h = rot_h(psi) + sum_i h_i H_i.
    pub fn velocity(&self, state: &FlowState) -> FieldP0Vec {
        let mut v = fem::rot_p1(self.mesh, &state.psi);
        let h = self.basis.combine(self.mesh, &state.h_coeffs);
        for (a, b) in v.0.iter_mut().zip(&h.0) {
            *a += *b;
        }
        v
    }

    /// Solve the vorticity mass system (omega, chi) = (V, rot chi).
    fn vorticity_from_velocity(&self, v: &FieldP0Vec, warm: &FieldP1) -> Result<FieldP1> {
        let b = fem::rot_load_p1(self.mesh, v);
        let (omega, report) = linalg::cg_solve(
            &self.mass,
            &b,
            &warm.0,
            self.config.solver_tol,
            10 * self.mesh.num_vertices().max(10),
            Precond::Jacobi,
        )?;
        if !report.converged {
            return Err(Error::SolverDiverged {
                iterations: report.iterations,
                residual: report.relative_residual,
            });
        }
        Ok(FieldP1(omega))
    }

    /// Effective momentum source G with
    /// G_K = F_K - mean(omega) J V_K - nu rot(omega)_K + 2 nu mean(kappa) V_K;
    /// integrating <G, W> element-wise is exact for the P1 x P0 products.
    /// With `include_curvature = false` the curvature term is left out (used
    /// by the decoupled constant-curvature path).
    fn momentum_source(
        &self,
        state: &FlowState,
        v: &FieldP0Vec,
        include_curvature: bool,
    ) -> FieldP0Vec {
        momentum_source_raw(
            self.mesh,
            &self.force,
            &self.curvature,
            self.config.nu,
            &state.omega,
            v,
            include_curvature,
        )
    }

    fn check_dt_guard(&self, v: &FieldP0Vec) {
        if self.warned_dt.get() {
            return;
        }
        let h_min = self.mesh.min_edge_length();
        let dt = self.config.dt;
        let nu = self.config.nu;
        if nu > 0.0 && dt > 0.2 * h_min * h_min / nu {
            log::warn!(
                "dt = {dt} exceeds the explicit diffusion limit 0.2 h_min^2/nu = {}",
                0.2 * h_min * h_min / nu
            );
            self.warned_dt.set(true);
        }
        let vmax = v.0.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if dt * vmax / h_min > 0.5 {
            log::warn!(
                "convective CFL dt max|V|/h_min = {} exceeds 0.5",
                dt * vmax / h_min
            );
            self.warned_dt.set(true);
        }
    }

    /// Initialize a Navier-Stokes state from a tangential velocity field.
    /// The gradient component of V0 is discarded (with a warning when it is
    /// not negligible); omega solves the mass system against rot tests.
    pub fn ns_init(&self, v0: &FieldP0Vec) -> Result<FlowState> {
        let projector = crate::hodge::HodgeProjector::new(self.mesh, self.config.solver_tol);
        let comps = crate::hodge::hodge_decompose_with(self.mesh, &projector, self.basis, v0)?;
        let grad_part = fem::grad_cr(self.mesh, &comps.q);
        let gnorm = fem::norm_vec(self.mesh, &grad_part);
        let vnorm = fem::norm_vec(self.mesh, v0).max(1e-300);
        if gnorm > 1e-8 * vnorm {
            log::warn!(
                "initial velocity has a gradient component of relative size {:.3e}; discarded",
                gnorm / vnorm
            );
        }
        let state = FlowState {
            psi: comps.psi,
            h_coeffs: comps.h_coeffs,
            omega: FieldP1::zeros(self.mesh),
            time: 0.0,
        };
        let v = self.velocity(&state);
        let omega = self.vorticity_from_velocity(&v, &state.omega)?;
        Ok(FlowState { omega, ..state })
    }

    /// One explicit Navier-Stokes step.
    pub fn ns_step(&self, state: &FlowState) -> Result<FlowState> {
        let dt = self.config.dt;
        let nu = self.config.nu;
        let v = self.velocity(state);
        self.check_dt_guard(&v);
        let const_curv = match self.config.curvature_mode {
            CurvatureMode::Constant(c) if nu != 0.0 => Some(c),
            _ => None,
        };
        let g = self.momentum_source(state, &v, const_curv.is_none());

        // Step 1: streamfunction.
        let m_omega = self.mass.matvec(&state.omega.0);
        let rot_g = fem::rot_load_p1(self.mesh, &g);
        let mut b: Vec<f64> = m_omega
            .iter()
            .zip(&rot_g)
            .map(|(mo, rg)| mo + dt * rg)
            .collect();
        if let Some(c) = const_curv {
            // (2 nu kappa V, rot phi) = 2 nu kappa (rot psi, rot phi).
            let k_psi = self.s_solver.matrix().matvec(&state.psi.0);
            for (bi, ki) in b.iter_mut().zip(&k_psi) {
                *bi += dt * 2.0 * nu * c * ki;
            }
        }
        if !b.iter().all(|v| v.is_finite()) {
            return Err(Error::BlowUp {
                time: state.time,
                step: (state.time / dt).round() as usize,
            });
        }
        let (psi_new, _) = self
            .s_solver
            .solve(&b, &state.psi.0)
            .map_err(|e| nan_is_blowup(e, state.time, dt))?;

        // Step 2: harmonic coefficients (orthonormal basis).
        let mut h_new = state.h_coeffs.clone();
        for (i, hfield) in self.basis.fields.iter().enumerate() {
            let mut r = fem::inner_vec(self.mesh, &g, hfield);
            if let Some(c) = const_curv {
                // (2 nu kappa V, H_i) = 2 nu kappa h_i.
                r += 2.0 * nu * c * state.h_coeffs[i];
            }
            h_new[i] += dt * r;
        }

        // Step 3: vorticity from the new velocity.
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
        let omega_new = self
            .vorticity_from_velocity(&v_new, &state.omega)
            .map_err(|e| nan_is_blowup(e, mid.time, dt))?;
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

    /// Initialize an Euler state from harmonic coefficients and a vorticity.
    /// On closed surfaces the vorticity is projected to zero mass-weighted
    /// mean (with a warning when the mean was not already zero).
    pub fn euler_init(&self, h_coeffs: Vec<f64>, omega0: &FieldP1) -> Result<FlowState> {
        assert_eq!(h_coeffs.len(), self.basis.dim());
        let mut omega = omega0.clone();
        if self.mesh.is_closed() {
            let mean = fem::mean_p1(self.mesh, &omega);
            let scale = omega.0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if mean.abs() > 1e-12 * scale.max(1.0) {
                log::warn!("initial vorticity has mean {mean:.3e} on a closed surface; projected to zero");
            }
            for v in &mut omega.0 {
                *v -= mean;
            }
        }
        let b = self.mass.matvec(&omega.0);
        let x0 = vec![0.0; self.mesh.num_vertices()];
        let (psi, _) = self.s_solver.solve(&b, &x0)?;
        Ok(FlowState {
            psi: FieldP1(psi),
            h_coeffs,
            omega,
            time: 0.0,
        })
    }

    /// One explicit Euler-equation step.
    pub fn euler_step(&self, state: &FlowState) -> Result<FlowState> {
        let dt = self.config.dt;
        let v = self.velocity(state);
        self.check_dt_guard(&v);

        // Step 1: vorticity update with weak curl of the force.
        let adv = fem::advection_p0(self.mesh, &v, &state.omega);
        let curl_f = fem::rot_load_p1(self.mesh, &self.force);
        let adv_load = fem::p0_load_p1(self.mesh, &adv);
        let m_omega = self.mass.matvec(&state.omega.0);
        let b: Vec<f64> = m_omega
            .iter()
            .zip(&curl_f)
            .zip(&adv_load)
            .map(|((mo, cf), al)| mo + dt * (cf - al))
            .collect();
        if !b.iter().all(|v| v.is_finite()) {
            return Err(Error::BlowUp {
                time: state.time,
                step: (state.time / dt).round() as usize,
            });
        }
        let (omega_new, report) = linalg::cg_solve(
            &self.mass,
            &b,
            &state.omega.0,
            self.config.solver_tol,
            10 * self.mesh.num_vertices().max(10),
            Precond::Jacobi,
        )
        .map_err(|e| nan_is_blowup(e, state.time, dt))?;
        if !report.converged {
            return Err(Error::SolverDiverged {
                iterations: report.iterations,
                residual: report.relative_residual,
            });
        }
        let omega_new = FieldP1(omega_new);

        // Step 2: harmonic update with (F - omega J V, H_i).
        let mut h_new = state.h_coeffs.clone();
        for (i, hfield) in self.basis.fields.iter().enumerate() {
            let fh = fem::inner_vec(self.mesh, &self.force, hfield);
            let whjv = {
                // (omega J V, H_i) with exact P1 x P0 quadrature.
                let jv = fem::j_rot(self.mesh, &v);
                fem::weighted_vec_form(self.mesh, &state.omega, &jv, hfield)
            };
            h_new[i] += dt * (fh - whjv);
        }

        // Step 3: recover the streamfunction.
        let b = self.mass.matvec(&omega_new.0);
        let (psi_new, _) = self
            .s_solver
            .solve(&b, &state.psi.0)
            .map_err(|e| nan_is_blowup(e, state.time, dt))?;
        let new = FlowState {
            psi: FieldP1(psi_new),
            h_coeffs: h_new,
            omega: omega_new,
            time: state.time + dt,
        };
        if !new.is_finite() {
            return Err(Error::BlowUp {
                time: new.time,
                step: (new.time / dt).round() as usize,
            });
        }
        Ok(new)
    }

    /// Advance with the scheme selected by the viscosity (nu = 0: Euler).
    pub fn step(&self, state: &FlowState) -> Result<FlowState> {
        if self.config.nu == 0.0 {
            self.euler_step(state)
        } else {
            self.ns_step(state)
        }
    }

    /// Recover the discrete total pressure p* in Q_h from the current state:
    /// (grad p*, grad q) = (F - omega J V - nu rot omega + 2 nu kappa V, grad q).
    pub fn recover_pressure(&self, state: &FlowState) -> Result<FieldCR> {
        let v = self.velocity(state);
        let g = self.momentum_source(state, &v, true);
        let b = fem::grad_load_cr(self.mesh, &g);
        let x0 = vec![0.0; self.mesh.num_edges()];
        let (p, _) = self.q_solver.solve(&b, &x0)?;
        Ok(FieldCR(p))
    }

    /// Kinetic energy (|rot psi|^2 + sum h_i^2) / 2, using orthogonality.
    pub fn kinetic_energy(&self, state: &FlowState) -> f64 {
        let rot = fem::rot_p1(self.mesh, &state.psi);
        0.5 * (fem::inner_vec(self.mesh, &rot, &rot)
            + state.h_coeffs.iter().map(|h| h * h).sum::<f64>())
    }

    /// Max divergence pairing |(V, grad eta_e)| over CR tests, relative to
    /// the field norm; zero for every state by construction.
    pub fn divergence_residual(&self, state: &FlowState) -> f64 {
        let v = self.velocity(state);
        let b = fem::grad_load_cr(self.mesh, &v);
        let scale = fem::norm_vec(self.mesh, &v).max(1e-300);
        b.iter().fold(0.0f64, |m, x| m.max(x.abs())) / scale
    }
}


/// NaN during a step's linear solve means the explicit scheme overflowed.
fn nan_is_blowup(e: Error, time: f64, dt: f64) -> Error {
    match e {
        Error::SolverNan => Error::BlowUp {
            time,
            step: (time / dt).round() as usize,
        },
        other => other,
    }
}

/// Per-element momentum source G_K = F_K - mean(omega) J V_K
/// - nu rot(omega)_K + 2 nu mean(kappa) V_K, shared between the homogeneous
/// and the mixed-boundary steppers.
pub(crate) fn momentum_source_raw(
    mesh: &SurfaceMesh,
    force: &FieldP0Vec,
    curvature: &FieldP1,
    nu: f64,
    omega: &FieldP1,
    v: &FieldP0Vec,
    include_curvature: bool,
) -> FieldP0Vec {
    let rot_omega = fem::rot_p1(mesh, omega);
    let mut g = Vec::with_capacity(mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let wbar = (omega.0[tri[0]] + omega.0[tri[1]] + omega.0[tri[2]]) / 3.0;
        let n = mesh.elem_normal()[t];
        let jv = n.cross(&v.0[t]);
        let mut gk = force.0[t] - jv * wbar - rot_omega.0[t] * nu;
        if include_curvature && nu != 0.0 {
            let kbar = (curvature.0[tri[0]] + curvature.0[tri[1]] + curvature.0[tri[2]]) / 3.0;
            gk += v.0[t] * (2.0 * nu * kbar);
        }
        g.push(gk);
    }
    FieldP0Vec(g)
}
