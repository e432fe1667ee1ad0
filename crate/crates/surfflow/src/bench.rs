//! Benchmark setups and quantitative metrics: the channel-with-obstacle
//! drag/lift/Strouhal extraction, the pierced-ring forcing, and the
//! Kelvin-Helmholtz torus initial condition.

use crate::bcs::{BoundaryData, BoundaryPatchLabels, PnLabel, WtLabel};
use crate::error::{Error, Result};
use crate::fem::{self, FieldCR, FieldP0Vec, FieldP1};
use crate::mesh::{SurfaceMesh, Vec3};

/// Time series of drag and lift coefficients.
#[derive(Debug, Clone, Default)]
pub struct ForceSeries {
    pub times: Vec<f64>,
    pub cd: Vec<f64>,
    pub cl: Vec<f64>,
}

impl ForceSeries {
    pub fn push(&mut self, t: f64, cd: f64, cl: f64) {
        if let Some(last) = self.times.last() {
            assert!(t > *last, "time samples must be strictly increasing");
        }
        self.times.push(t);
        self.cd.push(cd);
        self.cl.push(cl);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Channel benchmark parameters (the 2D-2 configuration).
#[derive(Debug, Clone, Copy)]
pub struct StBenchParams {
    /// Cylinder diameter.
    pub l: f64,
    pub v_mean: f64,
    /// Peak of the parabolic inflow profile.
    pub v_m: f64,
    pub nu: f64,
    pub width: f64,
    pub height: f64,
    pub hole_center: (f64, f64),
    pub hole_radius: f64,
}

impl Default for StBenchParams {
    fn default() -> Self {
        StBenchParams {
            l: 0.1,
            v_mean: 1.0,
            v_m: 1.5,
            nu: 0.001,
            width: 2.2,
            height: 0.41,
            hole_center: (0.2, 0.2),
            hole_radius: 0.05,
        }
    }
}

impl StBenchParams {
    pub fn reynolds(&self) -> f64 {
        self.v_mean * self.l / self.nu
    }

    /// Parabolic inflow profile 4 V_m y (H - y) / H^2.
    pub fn inflow_profile(&self, y: f64) -> f64 {
        4.0 * self.v_m * y * (self.height - y) / (self.height * self.height)
    }
}

/// Boundary labels for the channel benchmark: the outlet (x = width) carries
/// pressure and tangential data, everything else normal-velocity and
/// tangential data.
pub fn st_labels(mesh: &SurfaceMesh, params: &StBenchParams) -> BoundaryPatchLabels {
    let tol = 1e-9;
    let pn = mesh
        .boundary_edges()
        .iter()
        .map(|be| {
            if be.midpoint(mesh).x >= params.width - tol {
                PnLabel::Pressure
            } else {
                PnLabel::NormalVelocity
            }
        })
        .collect::<Vec<_>>();
    let n = pn.len();
    BoundaryPatchLabels {
        pn,
        wt: vec![WtLabel::Tangential; n],
    }
}

/// Boundary data for the channel benchmark: parabolic inflow at x = 0,
/// no-slip walls and obstacle, zero pressure and tangential velocity at the
/// outlet. All samples at edge midpoints.
pub fn st_boundary_data(mesh: &SurfaceMesh, params: &StBenchParams) -> BoundaryData {
    let mut data = BoundaryData::zero(mesh);
    for (i, be) in mesh.boundary_edges().iter().enumerate() {
        let m = be.midpoint(mesh);
        if m.x <= 1e-9 {
            // Inflow: velocity (profile, 0), outward normal (-1, 0).
            data.g_n[i] = -params.inflow_profile(m.y);
        }
    }
    data
}

/// Indices into `boundary_edges` of the loop around the obstacle: edges whose
/// midpoint lies within 2 radii of the hole center.
pub fn obstacle_edges(mesh: &SurfaceMesh, params: &StBenchParams) -> Result<Vec<usize>> {
    let (cx, cy) = params.hole_center;
    let sel: Vec<usize> = mesh
        .boundary_edges()
        .iter()
        .enumerate()
        .filter(|(_, be)| {
            let m = be.midpoint(mesh);
            ((m.x - cx).powi(2) + (m.y - cy).powi(2)).sqrt() < 2.0 * params.hole_radius
        })
        .map(|(i, _)| i)
        .collect();
    if sel.is_empty() {
        return Err(Error::Mesh("no obstacle boundary loop found".into()));
    }
    Ok(sel)
}

/// Force on the obstacle: F = integral of (-p N + nu omega T) over the
/// obstacle loop with midpoint quadrature. N is the unit normal of the
/// obstacle surface pointing into the fluid (the positive-drag convention:
/// for p(x,y) = x on a circle the result is (-pi R^2, 0)), and T = J N.
/// The total pressure p* is used directly: the velocity vanishes on the
/// obstacle, so p and p* differ by a spatial constant whose loop integral
/// against N vanishes.
pub fn obstacle_force(
    mesh: &SurfaceMesh,
    obstacle: &[usize],
    p_star: &FieldCR,
    omega: &FieldP1,
    nu: f64,
) -> (f64, f64) {
    let bedges = mesh.boundary_edges();
    let mut f = Vec3::zeros();
    for &i in obstacle {
        let be = &bedges[i];
        let len = be.length(mesh);
        // The fluid-domain conormal points into the obstacle; negate it.
        let n = -mesh.boundary_conormal(be);
        let t = mesh.elem_normal()[be.tri].cross(&n);
        let p = p_star.0[be.edge];
        let w = 0.5 * (omega.0[be.from] + omega.0[be.to]);
        f += (n * (-p) + t * (nu * w)) * len;
    }
    (f.x, f.y)
}

/// Drag and lift coefficients C = 2 F / (V_mean^2 L).
pub fn coefficients(f_d: f64, f_l: f64, params: &StBenchParams) -> (f64, f64) {
    let s = 2.0 / (params.v_mean * params.v_mean * params.l);
    (s * f_d, s * f_l)
}

/// Strouhal number from the mean period between successive upward zero
/// crossings of C_L - mean(C_L) after `t_start`. Requires at least three
/// full periods (four crossings).
pub fn strouhal(series: &ForceSeries, t_start: f64, params: &StBenchParams) -> Result<f64> {
    let idx: Vec<usize> = (0..series.len())
        .filter(|&i| series.times[i] >= t_start)
        .collect();
    if idx.len() < 3 {
        return Err(Error::InvalidParameter(
            "force series too short for Strouhal extraction".into(),
        ));
    }
    let mean = idx.iter().map(|&i| series.cl[i]).sum::<f64>() / idx.len() as f64;
    let mut crossings = Vec::new();
    for w in idx.windows(2) {
        let (i, j) = (w[0], w[1]);
        let (a, b) = (series.cl[i] - mean, series.cl[j] - mean);
        if a < 0.0 && b >= 0.0 {
            // Linear interpolation of the crossing time.
            let frac = a / (a - b);
            crossings.push(series.times[i] + frac * (series.times[j] - series.times[i]));
        }
    }
    if crossings.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 upward zero crossings, found {}",
            crossings.len()
        )));
    }
    let period =
        (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
    Ok(params.l / (params.v_mean * period))
}

/// Kelvin-Helmholtz parameters on the torus.
#[derive(Debug, Clone, Copy)]
pub struct KhParams {
    pub v_inf: f64,
    pub delta0: f64,
    pub c_n: f64,
}

impl Default for KhParams {
    fn default() -> Self {
        KhParams {
            v_inf: 1.0,
            delta0: 0.2,
            c_n: 0.02,
        }
    }
}

/// Initial velocity of the Kelvin-Helmholtz run:
/// V0 = V_inf tanh(y/delta0) (z, 0, -x) + c_n r exp(-y^2/delta0^2) rot(Psi0)
/// with Psi0 the P1 interpolant of cos(4 theta). The shear term is sampled
/// at centroids and projected to the tangent plane; the perturbation uses
/// the discrete rot, so it is discretely divergence-free.
pub fn kh_torus_initial_velocity(mesh: &SurfaceMesh, params: &KhParams) -> Result<FieldP0Vec> {
    if !mesh.is_closed() || mesh.euler_characteristic() != 0 {
        return Err(Error::Mesh(
            "Kelvin-Helmholtz initial data requires a closed torus mesh".into(),
        ));
    }
    let psi0 = FieldP1::from_fn(mesh, |p| (4.0 * p.z.atan2(p.x)).cos());
    let rot_psi0 = fem::rot_p1(mesh, &psi0);
    let mut out = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let c = mesh.centroid(t);
        let n = mesh.elem_normal()[t];
        let shear = Vec3::new(c.z, 0.0, -c.x) * (params.v_inf * (c.y / params.delta0).tanh());
        let shear_t = shear - n * shear.dot(&n);
        let r = (c.x * c.x + c.z * c.z).sqrt();
        let amp = params.c_n * r * (-c.y * c.y / (params.delta0 * params.delta0)).exp();
        out.push(shear_t + rot_psi0.0[t] * amp);
    }
    Ok(FieldP0Vec(out))
}

/// Constant azimuthal forcing of the pierced ring: per-element tangential
/// projection of the clockwise azimuthal direction, scaled to magnitude 0.1.
pub fn pierced_ring_force(mesh: &SurfaceMesh) -> FieldP0Vec {
    let mut out = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let c = mesh.centroid(t);
        let n = mesh.elem_normal()[t];
        let r = (c.x * c.x + c.y * c.y).sqrt().max(1e-300);
        let az = Vec3::new(-c.y / r, c.x / r, 0.0);
        let tang = az - n * az.dot(&n);
        let nrm = tang.norm();
        if nrm > 1e-12 {
            out.push(tang * (0.1 / nrm));
        } else {
            out.push(Vec3::zeros());
        }
    }
    FieldP0Vec(out)
}

/// Number of connected vertex components with |omega| above the given
/// fraction of the maximum, counted separately per sign.
pub fn vortex_census(omega: &FieldP1, mesh: &SurfaceMesh, threshold_fraction: f64) -> usize {
    assert!(threshold_fraction > 0.0 && threshold_fraction < 1.0);
    let max = omega.0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0;
    }
    let thr = threshold_fraction * max;
    // signs: +1 / -1 for active vertices, 0 inactive.
    let sign: Vec<i8> = omega
        .0
        .iter()
        .map(|&v| {
            if v >= thr {
                1
            } else if v <= -thr {
                -1
            } else {
                0
            }
        })
        .collect();
    let mut adj = vec![Vec::new(); mesh.num_vertices()];
    for e in mesh.edges() {
        adj[e.verts[0]].push(e.verts[1]);
        adj[e.verts[1]].push(e.verts[0]);
    }
    let mut seen = vec![false; mesh.num_vertices()];
    let mut count = 0;
    for v in 0..mesh.num_vertices() {
        if sign[v] == 0 || seen[v] {
            continue;
        }
        count += 1;
        let mut stack = vec![v];
        seen[v] = true;
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if !seen[w] && sign[w] == sign[u] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}
