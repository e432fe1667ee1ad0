//! Low-order finite element realization: P0 tangential vector fields,
//! S1/S1_0 Lagrange scalars, Crouzeix-Raviart scalars, the discrete
//! operators grad_h, rot_h, J_h, and all assembled bilinear forms.

use crate::error::{Error, Result};
use crate::linalg::{self, Precond, SolveReport, SparseMatrix};
use crate::mesh::{SurfaceMesh, Vec3};

/// Scalar field with one coefficient per vertex (continuous P1).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldP1(pub Vec<f64>);

/// Scalar field with one coefficient per edge midpoint (Crouzeix-Raviart).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCR(pub Vec<f64>);

/// Piecewise constant tangential vector field, one ambient 3-vector per
/// triangle, constrained to the element plane.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldP0Vec(pub Vec<Vec3>);

impl FieldP1 {
    pub fn zeros(mesh: &SurfaceMesh) -> Self {
        FieldP1(vec![0.0; mesh.num_vertices()])
    }

    pub fn from_fn(mesh: &SurfaceMesh, f: impl Fn(&Vec3) -> f64) -> Self {
        FieldP1(mesh.vertices().iter().map(f).collect())
    }
}

impl FieldCR {
    pub fn zeros(mesh: &SurfaceMesh) -> Self {
        FieldCR(vec![0.0; mesh.num_edges()])
    }

    /// Interpolate a P1 field at edge midpoints (the S1 -> CR1 embedding).
    pub fn from_p1(mesh: &SurfaceMesh, f: &FieldP1) -> Self {
        FieldCR(
            mesh.edges()
                .iter()
                .map(|e| 0.5 * (f.0[e.verts[0]] + f.0[e.verts[1]]))
                .collect(),
        )
    }
}

impl FieldP0Vec {
    pub fn zeros(mesh: &SurfaceMesh) -> Self {
        FieldP0Vec(vec![Vec3::zeros(); mesh.num_triangles()])
    }

    /// Sample an ambient vector field at element centroids and project onto
    /// each tangent plane.
    pub fn project_ambient(mesh: &SurfaceMesh, f: impl Fn(&Vec3) -> Vec3) -> Self {
        FieldP0Vec(
            (0..mesh.num_triangles())
                .map(|t| {
                    let n = mesh.elem_normal()[t];
                    let v = f(&mesh.centroid(t));
                    v - n * v.dot(&n)
                })
                .collect(),
        )
    }

    /// Largest normal component; should be ~0 for a tangential field.
    pub fn max_normal_component(&self, mesh: &SurfaceMesh) -> f64 {
        self.0
            .iter()
            .zip(mesh.elem_normal())
            .map(|(v, n)| v.dot(n).abs())
            .fold(0.0, f64::max)
    }
}

/// Element-wise gradient of a P1 field.
pub fn grad_p1(mesh: &SurfaceMesh, f: &FieldP1) -> FieldP0Vec {
    FieldP0Vec(
        mesh.triangles()
            .iter()
            .enumerate()
            .map(|(t, tri)| {
                let g = mesh.hat_gradients()[t];
                g[0] * f.0[tri[0]] + g[1] * f.0[tri[1]] + g[2] * f.0[tri[2]]
            })
            .collect(),
    )
}

/// Per-element gradients of the three CR basis functions (edge opposite
/// local vertex i has basis 1 - 2 lambda_i, so gradient -2 grad lambda_i).
fn cr_gradients(mesh: &SurfaceMesh, t: usize) -> [Vec3; 3] {
    let g = mesh.hat_gradients()[t];
    [g[0] * -2.0, g[1] * -2.0, g[2] * -2.0]
}

/// Element-wise gradient of a Crouzeix-Raviart field.
pub fn grad_cr(mesh: &SurfaceMesh, q: &FieldCR) -> FieldP0Vec {
    FieldP0Vec(
        (0..mesh.num_triangles())
            .map(|t| {
                let ge = cr_gradients(mesh, t);
                let te = mesh.tri_edges()[t];
                ge[0] * q.0[te[0]] + ge[1] * q.0[te[1]] + ge[2] * q.0[te[2]]
            })
            .collect(),
    )
}

/// Element-wise 90 degree rotation J_h(X) = N x X.
pub fn j_rot(mesh: &SurfaceMesh, x: &FieldP0Vec) -> FieldP0Vec {
    FieldP0Vec(
        x.0.iter()
            .zip(mesh.elem_normal())
            .map(|(v, n)| n.cross(v))
            .collect(),
    )
}

/// Discrete rotation rot_h(f) = -J_h grad_h(f) for P1 fields.
pub fn rot_p1(mesh: &SurfaceMesh, f: &FieldP1) -> FieldP0Vec {
    let g = grad_p1(mesh, f);
    FieldP0Vec(
        g.0.iter()
            .zip(mesh.elem_normal())
            .map(|(v, n)| -n.cross(v))
            .collect(),
    )
}

/// L2 inner product of two P0 vector fields.
pub fn inner_vec(mesh: &SurfaceMesh, x: &FieldP0Vec, y: &FieldP0Vec) -> f64 {
    x.0.iter()
        .zip(&y.0)
        .zip(mesh.elem_area())
        .map(|((a, b), &area)| area * a.dot(b))
        .sum()
}

pub fn norm_vec(mesh: &SurfaceMesh, x: &FieldP0Vec) -> f64 {
    inner_vec(mesh, x, x).sqrt()
}

/// Exact integral of (P1 scalar w) * <X, Y> for P0 vector fields:
/// sum_K (area_K / 3) (w_1 + w_2 + w_3) <X_K, Y_K>.
pub fn weighted_vec_form(mesh: &SurfaceMesh, w: &FieldP1, x: &FieldP0Vec, y: &FieldP0Vec) -> f64 {
    mesh.triangles()
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            let wbar = (w.0[tri[0]] + w.0[tri[1]] + w.0[tri[2]]) / 3.0;
            mesh.elem_area()[t] * wbar * x.0[t].dot(&y.0[t])
        })
        .sum()
}

/// Per-element advection values <V_K, grad_h(w)_K>.
pub fn advection_p0(mesh: &SurfaceMesh, v: &FieldP0Vec, w: &FieldP1) -> Vec<f64> {
    let g = grad_p1(mesh, w);
    v.0.iter().zip(&g.0).map(|(a, b)| a.dot(b)).collect()
}

/// Consistent P1 mass matrix: element contribution area/12 [[2,1,1],[1,2,1],[1,1,2]].
pub fn mass_p1(mesh: &SurfaceMesh) -> SparseMatrix {
    let mut trips = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.elem_area()[t] / 12.0;
        for i in 0..3 {
            for j in 0..3 {
                let v = if i == j { 2.0 * a } else { a };
                trips.push((tri[i], tri[j], v));
            }
        }
    }
    SparseMatrix::assemble(&trips, mesh.num_vertices(), mesh.num_vertices()).unwrap()
}

/// Lumped P1 mass weights: w_i = integral of hat_i = sum of incident areas / 3.
pub fn lumped_p1_weights(mesh: &SurfaceMesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for &v in tri {
            w[v] += mesh.elem_area()[t] / 3.0;
        }
    }
    w
}

/// CR mass weights: integral of the edge basis function = incident areas / 3.
pub fn cr_weights(mesh: &SurfaceMesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.num_edges()];
    for (t, te) in mesh.tri_edges().iter().enumerate() {
        for &e in te {
            w[e] += mesh.elem_area()[t] / 3.0;
        }
    }
    w
}

/// P1 stiffness matrix (grad, grad). Since J_h is an element-wise isometry
/// this is also the rot-rot matrix of the streamfunction solves.
pub fn stiffness_p1(mesh: &SurfaceMesh) -> SparseMatrix {
    let mut trips = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = mesh.hat_gradients()[t];
        let area = mesh.elem_area()[t];
        for i in 0..3 {
            for j in 0..3 {
                trips.push((tri[i], tri[j], area * g[i].dot(&g[j])));
            }
        }
    }
    SparseMatrix::assemble(&trips, mesh.num_vertices(), mesh.num_vertices()).unwrap()
}

/// Crouzeix-Raviart stiffness matrix (grad, grad) over edge dofs.
pub fn stiffness_cr(mesh: &SurfaceMesh) -> SparseMatrix {
    let mut trips = Vec::with_capacity(9 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let g = cr_gradients(mesh, t);
        let te = mesh.tri_edges()[t];
        let area = mesh.elem_area()[t];
        for i in 0..3 {
            for j in 0..3 {
                trips.push((te[i], te[j], area * g[i].dot(&g[j])));
            }
        }
    }
    SparseMatrix::assemble(&trips, mesh.num_edges(), mesh.num_edges()).unwrap()
}

/// Load vector b_i = (X, rot_h(hat_i))_h over all P1 dofs.
pub fn rot_load_p1(mesh: &SurfaceMesh, x: &FieldP0Vec) -> Vec<f64> {
    let mut b = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let n = mesh.elem_normal()[t];
        let g = mesh.hat_gradients()[t];
        let area = mesh.elem_area()[t];
        for i in 0..3 {
            b[tri[i]] += area * x.0[t].dot(&-n.cross(&g[i]));
        }
    }
    b
}

/// Load vector b_e = (X, grad_h(eta_e))_h over all CR dofs.
pub fn grad_load_cr(mesh: &SurfaceMesh, x: &FieldP0Vec) -> Vec<f64> {
    let mut b = vec![0.0; mesh.num_edges()];
    for t in 0..mesh.num_triangles() {
        let g = cr_gradients(mesh, t);
        let te = mesh.tri_edges()[t];
        let area = mesh.elem_area()[t];
        for i in 0..3 {
            b[te[i]] += area * x.0[t].dot(&g[i]);
        }
    }
    b
}

/// Load vector b_i = (a, hat_i)_h for a P0 scalar a: per element area/3.
pub fn p0_load_p1(mesh: &SurfaceMesh, a: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let c = mesh.elem_area()[t] * a[t] / 3.0;
        for &v in tri {
            b[v] += c;
        }
    }
    b
}

/// Mass-weighted mean of a P1 field: (f, 1)_h / |M|.
pub fn mean_p1(mesh: &SurfaceMesh, f: &FieldP1) -> f64 {
    let w = lumped_p1_weights(mesh);
    linalg::dot(&w, &f.0) / mesh.total_area()
}

/// Homogeneous constraint handling for a scalar solve space: either a
/// restriction to free dofs (Dirichlet) or a zero-weighted-mean gauge.
#[derive(Debug, Clone)]
pub enum DofSpace {
    Restricted { free: Vec<usize>, full_dim: usize },
    ZeroMean { weights: Vec<f64> },
}

impl DofSpace {
    /// S1_0: boundary vertices fixed to zero, or zero mean on closed meshes.
    pub fn s1_0(mesh: &SurfaceMesh) -> Self {
        if mesh.is_closed() {
            DofSpace::ZeroMean {
                weights: lumped_p1_weights(mesh),
            }
        } else {
            DofSpace::Restricted {
                free: (0..mesh.num_vertices())
                    .filter(|&v| !mesh.is_boundary_vertex(v))
                    .collect(),
                full_dim: mesh.num_vertices(),
            }
        }
    }

    /// Q_h = CR1 with zero mean.
    pub fn cr_zero_mean(mesh: &SurfaceMesh) -> Self {
        DofSpace::ZeroMean {
            weights: cr_weights(mesh),
        }
    }

    pub fn full_dim(&self) -> usize {
        match self {
            DofSpace::Restricted { full_dim, .. } => *full_dim,
            DofSpace::ZeroMean { weights } => weights.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DofSpace::Restricted { free, .. } => free.len(),
            DofSpace::ZeroMean { weights } => weights.len() - 1,
        }
    }

    pub fn free_dofs(&self) -> Option<&[usize]> {
        match self {
            DofSpace::Restricted { free, .. } => Some(free),
            DofSpace::ZeroMean { .. } => None,
        }
    }
}

/// A solver for systems posed on a [`DofSpace`], caching the restricted
/// matrix. Supports warm starts via the previous full-length solution.
pub struct SpaceSolver {
    space: DofSpace,
    full: SparseMatrix,
    restricted: Option<SparseMatrix>,
    pub tol: f64,
    pub max_iter: usize,
}

impl SpaceSolver {
    pub fn new(space: DofSpace, matrix: SparseMatrix, tol: f64) -> Self {
        debug_assert!(matrix.is_symmetric(1e-12));
        let restricted = space.free_dofs().map(|free| matrix.restrict(free));
        let max_iter = 10 * matrix.nrows().max(10);
        SpaceSolver {
            space,
            full: matrix,
            restricted,
            tol,
            max_iter,
        }
    }

    pub fn space(&self) -> &DofSpace {
        &self.space
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.full
    }

    /// Solve with a full-length right-hand side. Entries of `b` at
    /// constrained dofs are ignored; the returned vector is full-length with
    /// zeros there (or a zero-mean gauge for closed/CR spaces).
    pub fn solve(&self, b: &[f64], x0: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        match &self.space {
            DofSpace::Restricted { free, full_dim } => {
                let sub = self.restricted.as_ref().unwrap();
                let bs: Vec<f64> = free.iter().map(|&i| b[i]).collect();
                let xs0: Vec<f64> = free.iter().map(|&i| x0[i]).collect();
                let (xs, report) =
                    linalg::cg_solve(sub, &bs, &xs0, self.tol, self.max_iter, Precond::Jacobi)?;
                if !report.converged {
                    return Err(Error::SolverDiverged {
                        iterations: report.iterations,
                        residual: report.relative_residual,
                    });
                }
                let mut x = vec![0.0; *full_dim];
                for (k, &i) in free.iter().enumerate() {
                    x[i] = xs[k];
                }
                Ok((x, report))
            }
            DofSpace::ZeroMean { weights } => {
                let (x, report) = linalg::solve_singular_zero_mean(
                    &self.full,
                    b,
                    weights,
                    x0,
                    self.tol,
                    self.max_iter,
                )?;
                if !report.converged {
                    return Err(Error::SolverDiverged {
                        iterations: report.iterations,
                        residual: report.relative_residual,
                    });
                }
                Ok((x, report))
            }
        }
    }
}
