//! Independent dense reference implementation of the discrete scheme.
//!
//! Everything here is recomputed from raw vertex/triangle data with nalgebra
//! dense matrices and LU factorizations: element geometry, mass/stiffness
//! assembly, constrained solves, the Hodge projections, and full NS/Euler
//! steps. Only the harmonic basis fields are shared with the library (they
//! are input data, not part of the scheme under test).

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use surfflow::fem::{FieldP0Vec, FieldP1};
use surfflow::hodge::HarmonicBasis;
use surfflow::mesh::{SurfaceMesh, Vec3};
use surfflow::stepper::FlowState;

/// Per-element geometry computed from scratch.
pub struct DenseGeometry {
    pub area: Vec<f64>,
    pub normal: Vec<Vec3>,
    /// Gradients of the three vertex hat functions.
    pub grad_hat: Vec<[Vec3; 3]>,
}

impl DenseGeometry {
    pub fn new(mesh: &SurfaceMesh) -> Self {
        let vs = mesh.vertices();
        let mut area = Vec::new();
        let mut normal = Vec::new();
        let mut grad_hat = Vec::new();
        for tri in mesh.triangles() {
            let p = [vs[tri[0]], vs[tri[1]], vs[tri[2]]];
            let c = (p[1] - p[0]).cross(&(p[2] - p[0]));
            let a2 = c.norm();
            let n = c / a2;
            area.push(0.5 * a2);
            normal.push(n);
            // grad lambda_i = n x (opposite edge) / (2 area).
            grad_hat.push([
                n.cross(&(p[2] - p[1])) / a2,
                n.cross(&(p[0] - p[2])) / a2,
                n.cross(&(p[1] - p[0])) / a2,
            ]);
        }
        DenseGeometry {
            area,
            normal,
            grad_hat,
        }
    }
}

pub struct DenseRef<'a> {
    pub mesh: &'a SurfaceMesh,
    pub geo: DenseGeometry,
    pub mass: DMatrix<f64>,
    pub stiff_p1: DMatrix<f64>,
    pub stiff_cr: DMatrix<f64>,
    /// Interior vertices (empty on closed meshes, where a zero-mean gauge
    /// applies instead).
    pub interior: Vec<usize>,
    pub lumped: Vec<f64>,
    pub cr_weights: Vec<f64>,
}

impl<'a> DenseRef<'a> {
    pub fn new(mesh: &'a SurfaceMesh) -> Self {
        let geo = DenseGeometry::new(mesh);
        let nv = mesh.num_vertices();
        let ne = mesh.num_edges();
        let nt = mesh.num_triangles();

        let mut mass = DMatrix::zeros(nv, nv);
        let mut stiff_p1 = DMatrix::zeros(nv, nv);
        let mut stiff_cr = DMatrix::zeros(ne, ne);
        let mut lumped = vec![0.0; nv];
        let mut cr_weights = vec![0.0; ne];
        for t in 0..nt {
            let tri = mesh.triangles()[t];
            let te = mesh.tri_edges()[t];
            let a = geo.area[t];
            for i in 0..3 {
                lumped[tri[i]] += a / 3.0;
                cr_weights[te[i]] += a / 3.0;
                for j in 0..3 {
                    mass[(tri[i], tri[j])] += a / 12.0 * if i == j { 2.0 } else { 1.0 };
                    stiff_p1[(tri[i], tri[j])] += a * geo.grad_hat[t][i].dot(&geo.grad_hat[t][j]);
                    // CR basis on the edge opposite vertex i is 1 - 2 lambda_i.
                    stiff_cr[(te[i], te[j])] +=
                        4.0 * a * geo.grad_hat[t][i].dot(&geo.grad_hat[t][j]);
                }
            }
        }
        let interior = if mesh.is_closed() {
            Vec::new()
        } else {
            (0..nv).filter(|&v| !mesh.is_boundary_vertex(v)).collect()
        };
        DenseRef {
            mesh,
            geo,
            mass,
            stiff_p1,
            stiff_cr,
            interior,
            lumped,
            cr_weights,
        }
    }

    pub fn grad_p1(&self, f: &[f64]) -> Vec<Vec3> {
        self.mesh
            .triangles()
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                let g = &self.geo.grad_hat[t];
                g[0] * f[tri[0]] + g[1] * f[tri[1]] + g[2] * f[tri[2]]
            })
            .collect()
    }

    pub fn rot_p1(&self, f: &[f64]) -> Vec<Vec3> {
        self.grad_p1(f)
            .iter()
            .zip(&self.geo.normal)
            .map(|(g, n)| -n.cross(g))
            .collect()
    }

    pub fn grad_cr(&self, q: &[f64]) -> Vec<Vec3> {
        (0..self.mesh.num_triangles())
            .map(|t| {
                let g = &self.geo.grad_hat[t];
                let te = self.mesh.tri_edges()[t];
                (g[0] * q[te[0]] + g[1] * q[te[1]] + g[2] * q[te[2]]) * -2.0
            })
            .collect()
    }

    pub fn inner_vec(&self, x: &[Vec3], y: &[Vec3]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.geo.area)
            .map(|((a, b), &ar)| ar * a.dot(b))
            .sum()
    }

    pub fn norm_vec(&self, x: &[Vec3]) -> f64 {
        self.inner_vec(x, x).sqrt()
    }

    /// b_i = (X, rot hat_i).
    pub fn rot_load_p1(&self, x: &[Vec3]) -> Vec<f64> {
        let mut b = vec![0.0; self.mesh.num_vertices()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let n = self.geo.normal[t];
            for i in 0..3 {
                b[tri[i]] +=
                    self.geo.area[t] * x[t].dot(&-n.cross(&self.geo.grad_hat[t][i]));
            }
        }
        b
    }

    /// b_e = (X, grad eta_e).
    pub fn grad_load_cr(&self, x: &[Vec3]) -> Vec<f64> {
        let mut b = vec![0.0; self.mesh.num_edges()];
        for t in 0..self.mesh.num_triangles() {
            let te = self.mesh.tri_edges()[t];
            for i in 0..3 {
                b[te[i]] +=
                    -2.0 * self.geo.area[t] * x[t].dot(&self.geo.grad_hat[t][i]);
            }
        }
        b
    }

    /// LU solve of the full mass system.
    pub fn mass_solve(&self, b: &[f64]) -> Vec<f64> {
        let lu = self.mass.clone().lu();
        lu.solve(&DVector::from_column_slice(b))
            .expect("dense mass solve")
            .as_slice()
            .to_vec()
    }

    /// Solve K psi = b on S1_0: Dirichlet restriction on meshes with
    /// boundary, a weighted-zero-mean saddle point on closed ones.
    pub fn s1_0_solve(&self, b: &[f64]) -> Vec<f64> {
        if self.mesh.is_closed() {
            solve_zero_mean(&self.stiff_p1, b, &self.lumped)
        } else {
            solve_restricted(&self.stiff_p1, b, &self.interior)
        }
    }

    /// Solve the CR stiffness system in the zero-weighted-mean gauge.
    pub fn cr_solve(&self, b: &[f64]) -> Vec<f64> {
        solve_zero_mean(&self.stiff_cr, b, &self.cr_weights)
    }

    /// Dense Hodge decomposition: returns (q, psi, harmonic remainder).
    pub fn hodge_decompose(&self, x: &[Vec3]) -> (Vec<f64>, Vec<f64>, Vec<Vec3>) {
        let q = self.cr_solve(&self.grad_load_cr(x));
        let psi = self.s1_0_solve(&self.rot_load_p1(x));
        let gq = self.grad_cr(&q);
        let rp = self.rot_p1(&psi);
        let h: Vec<Vec3> = x
            .iter()
            .zip(&gq)
            .zip(&rp)
            .map(|((a, b), c)| a - b - c)
            .collect();
        (q, psi, h)
    }

    pub fn velocity(&self, basis: &HarmonicBasis, state: &FlowState) -> Vec<Vec3> {
        let mut v = self.rot_p1(&state.psi.0);
        for (i, hf) in basis.fields.iter().enumerate() {
            for (a, b) in v.iter_mut().zip(&hf.0) {
                *a += *b * state.h_coeffs[i];
            }
        }
        v
    }

    /// G_K = F_K - mean(omega) J V_K - nu rot(omega)_K + 2 nu mean(kappa) V_K.
    fn momentum_source(
        &self,
        force: &[Vec3],
        curvature: &[f64],
        nu: f64,
        omega: &[f64],
        v: &[Vec3],
    ) -> Vec<Vec3> {
        let rot_w = self.rot_p1(omega);
        self.mesh
            .triangles()
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                let wbar = (omega[tri[0]] + omega[tri[1]] + omega[tri[2]]) / 3.0;
                let kbar = (curvature[tri[0]] + curvature[tri[1]] + curvature[tri[2]]) / 3.0;
                let jv = self.geo.normal[t].cross(&v[t]);
                force[t] - jv * wbar - rot_w[t] * nu + v[t] * (2.0 * nu * kbar)
            })
            .collect()
    }

    /// One dense Navier-Stokes step (generic curvature path).
    pub fn ns_step(
        &self,
        basis: &HarmonicBasis,
        nu: f64,
        dt: f64,
        force: &[Vec3],
        curvature: &[f64],
        state: &FlowState,
    ) -> FlowState {
        let v = self.velocity(basis, state);
        let g = self.momentum_source(force, curvature, nu, &state.omega.0, &v);

        let m_omega = &self.mass * DVector::from_column_slice(&state.omega.0);
        let rot_g = self.rot_load_p1(&g);
        let b: Vec<f64> = m_omega
            .iter()
            .zip(&rot_g)
            .map(|(mo, rg)| mo + dt * rg)
            .collect();
        let psi_new = self.s1_0_solve(&b);

        let mut h_new = state.h_coeffs.clone();
        for (i, hf) in basis.fields.iter().enumerate() {
            h_new[i] += dt * self.inner_vec(&g, &hf.0);
        }

        let mid = FlowState {
            psi: FieldP1(psi_new),
            h_coeffs: h_new,
            omega: state.omega.clone(),
            time: state.time + dt,
        };
        let v_new = self.velocity(basis, &mid);
        let omega_new = self.mass_solve(&self.rot_load_p1(&v_new));
        FlowState {
            omega: FieldP1(omega_new),
            ..mid
        }
    }

    /// One dense Euler step.
    pub fn euler_step(
        &self,
        basis: &HarmonicBasis,
        dt: f64,
        force: &[Vec3],
        state: &FlowState,
    ) -> FlowState {
        let v = self.velocity(basis, state);

        let grad_w = self.grad_p1(&state.omega.0);
        let curl_f = self.rot_load_p1(force);
        let mut adv_load = vec![0.0; self.mesh.num_vertices()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let c = self.geo.area[t] * v[t].dot(&grad_w[t]) / 3.0;
            for &vtx in tri {
                adv_load[vtx] += c;
            }
        }
        let m_omega = &self.mass * DVector::from_column_slice(&state.omega.0);
        let b: Vec<f64> = m_omega
            .iter()
            .zip(&curl_f)
            .zip(&adv_load)
            .map(|((mo, cf), al)| mo + dt * (cf - al))
            .collect();
        let omega_new = self.mass_solve(&b);

        let jv: Vec<Vec3> = v
            .iter()
            .zip(&self.geo.normal)
            .map(|(x, n)| n.cross(x))
            .collect();
        let mut h_new = state.h_coeffs.clone();
        for (i, hf) in basis.fields.iter().enumerate() {
            let fh = self.inner_vec(force, &hf.0);
            let whjv: f64 = self
                .mesh
                .triangles()
                .iter()
                .enumerate()
                .map(|(t, tri)| {
                    let wbar =
                        (state.omega.0[tri[0]] + state.omega.0[tri[1]] + state.omega.0[tri[2]])
                            / 3.0;
                    self.geo.area[t] * wbar * jv[t].dot(&hf.0[t])
                })
                .sum();
            h_new[i] += dt * (fh - whjv);
        }

        let mb = &self.mass * DVector::from_column_slice(&omega_new);
        let psi_new = self.s1_0_solve(mb.as_slice());
        FlowState {
            psi: FieldP1(psi_new),
            h_coeffs: h_new,
            omega: FieldP1(omega_new),
            time: state.time + dt,
        }
    }
}

/// Restrict to free dofs, LU solve, scatter back with zeros elsewhere.
pub fn solve_restricted(a: &DMatrix<f64>, b: &[f64], free: &[usize]) -> Vec<f64> {
    let k = free.len();
    let mut sub = DMatrix::zeros(k, k);
    let mut bs = DVector::zeros(k);
    for (i, &fi) in free.iter().enumerate() {
        bs[i] = b[fi];
        for (j, &fj) in free.iter().enumerate() {
            sub[(i, j)] = a[(fi, fj)];
        }
    }
    let xs = sub.lu().solve(&bs).expect("dense restricted solve");
    let mut x = vec![0.0; b.len()];
    for (i, &fi) in free.iter().enumerate() {
        x[fi] = xs[i];
    }
    x
}

/// Saddle-point LU solve of [[A, w], [w^T, 0]] enforcing sum w_i x_i = 0.
pub fn solve_zero_mean(a: &DMatrix<f64>, b: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut aug = DMatrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(a);
    let mut rhs = DVector::zeros(n + 1);
    for i in 0..n {
        aug[(i, n)] = weights[i];
        aug[(n, i)] = weights[i];
        rhs[i] = b[i];
    }
    let x = aug.lu().solve(&rhs).expect("dense zero-mean solve");
    x.as_slice()[..n].to_vec()
}

pub fn max_diff_scalar(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn max_diff_vec(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn to_vec3s(f: &FieldP0Vec) -> Vec<Vec3> {
    f.0.clone()
}
