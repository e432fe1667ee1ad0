//! Built-in mesh generators for the benchmark geometries.

use super::{SurfaceMesh, Vec3};
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Generator selection with shape-specific parameters.
#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshKind {
    Rectangle {
        width: f64,
        height: f64,
        nx: usize,
        ny: usize,
    },
    Annulus {
        r_inner: f64,
        r_outer: f64,
        n_radial: usize,
        n_angular: usize,
    },
    /// Torus about the y-axis: x(theta, phi) =
    /// ((2 + cos phi) cos theta, sin phi, (2 + cos phi) sin theta).
    Torus {
        n_theta: usize,
        n_phi: usize,
    },
    /// Open cylinder about the z-axis (lateral surface only).
    CylinderLateral {
        radius: f64,
        height: f64,
        n_angular: usize,
        n_axial: usize,
    },
    /// Unit-diameter, unit-height cylinder about the z-axis, pierced at
    /// z = 0.025 on the negative y-axis by a hole of diameter 1/8.
    CylinderWithHole {
        n_angular: usize,
        n_axial: usize,
    },
    /// [0, 2.2] x [0, 0.41] minus the disk of radius 0.05 at (0.2, 0.2),
    /// meshed at the given target edge length.
    ChannelWithHole {
        target_h: f64,
    },
}

pub fn generate_mesh(kind: &MeshKind) -> Result<SurfaceMesh> {
    match *kind {
        MeshKind::Rectangle {
            width,
            height,
            nx,
            ny,
        } => rectangle(width, height, nx, ny),
        MeshKind::Annulus {
            r_inner,
            r_outer,
            n_radial,
            n_angular,
        } => annulus(r_inner, r_outer, n_radial, n_angular),
        MeshKind::Torus { n_theta, n_phi } => torus(n_theta, n_phi),
        MeshKind::CylinderLateral {
            radius,
            height,
            n_angular,
            n_axial,
        } => cylinder_lateral(radius, height, n_angular, n_axial),
        MeshKind::CylinderWithHole { n_angular, n_axial } => {
            cylinder_with_hole(n_angular, n_axial)
        }
        MeshKind::ChannelWithHole { target_h } => channel_with_hole(target_h),
    }
}

fn rectangle(width: f64, height: f64, nx: usize, ny: usize) -> Result<SurfaceMesh> {
    if width <= 0.0 || height <= 0.0 || nx < 1 || ny < 1 {
        return Err(Error::InvalidParameter(
            "rectangle needs positive size and subdivisions".into(),
        ));
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Vec3::new(
                width * i as f64 / nx as f64,
                height * j as f64 / ny as f64,
                0.0,
            ));
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    SurfaceMesh::new(vertices, triangles)
}

fn annulus(r_inner: f64, r_outer: f64, n_radial: usize, n_angular: usize) -> Result<SurfaceMesh> {
    if !(0.0 < r_inner && r_inner < r_outer) || n_radial < 1 || n_angular < 3 {
        return Err(Error::InvalidParameter(
            "annulus needs 0 < r_inner < r_outer, n_radial >= 1, n_angular >= 3".into(),
        ));
    }
    let mut vertices = Vec::new();
    for j in 0..=n_radial {
        let r = r_inner + (r_outer - r_inner) * j as f64 / n_radial as f64;
        for i in 0..n_angular {
            let th = 2.0 * PI * i as f64 / n_angular as f64;
            vertices.push(Vec3::new(r * th.cos(), r * th.sin(), 0.0));
        }
    }
    let idx = |i: usize, j: usize| j * n_angular + (i % n_angular);
    let mut triangles = Vec::new();
    for j in 0..n_radial {
        for i in 0..n_angular {
            let (a, b, c, d) = (idx(i, j), idx(i, j + 1), idx(i + 1, j + 1), idx(i + 1, j));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    SurfaceMesh::new(vertices, triangles)
}

fn torus(n_theta: usize, n_phi: usize) -> Result<SurfaceMesh> {
    if n_theta < 3 || n_phi < 3 {
        return Err(Error::InvalidParameter(
            "torus needs n_theta >= 3 and n_phi >= 3".into(),
        ));
    }
    let mut vertices = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let th = 2.0 * PI * i as f64 / n_theta as f64;
        for j in 0..n_phi {
            let ph = 2.0 * PI * j as f64 / n_phi as f64;
            vertices.push(Vec3::new(
                (2.0 + ph.cos()) * th.cos(),
                ph.sin(),
                (2.0 + ph.cos()) * th.sin(),
            ));
        }
    }
    let idx = |i: usize, j: usize| (i % n_theta) * n_phi + (j % n_phi);
    let mut triangles = Vec::with_capacity(2 * n_theta * n_phi);
    for i in 0..n_theta {
        for j in 0..n_phi {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            // Ordered so the element normal points out of the solid torus.
            triangles.push([a, c, b]);
            triangles.push([a, d, c]);
        }
    }
    SurfaceMesh::new(vertices, triangles)
}

fn cylinder_lateral(
    radius: f64,
    height: f64,
    n_angular: usize,
    n_axial: usize,
) -> Result<SurfaceMesh> {
    if radius <= 0.0 || height <= 0.0 || n_angular < 3 || n_axial < 1 {
        return Err(Error::InvalidParameter(
            "cylinder needs positive radius/height, n_angular >= 3, n_axial >= 1".into(),
        ));
    }
    let mut vertices = Vec::new();
    for j in 0..=n_axial {
        let z = height * (j as f64 / n_axial as f64 - 0.5);
        for i in 0..n_angular {
            let th = 2.0 * PI * i as f64 / n_angular as f64;
            vertices.push(Vec3::new(radius * th.cos(), radius * th.sin(), z));
        }
    }
    let idx = |i: usize, j: usize| j * n_angular + (i % n_angular);
    let mut triangles = Vec::new();
    for j in 0..n_axial {
        for i in 0..n_angular {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    SurfaceMesh::new(vertices, triangles)
}

/// Remove the triangles of a hole from a parameter-space triangulation and
/// snap the rim vertices onto the hole circle.
///
/// `param` holds 2D parameter coordinates, `dist` measures (possibly
/// periodicity-aware) distance to the hole center. Vertices left inside the
/// circle after triangle removal are pushed radially onto it via `project`.
fn cut_hole(
    param: &mut Vec<[f64; 2]>,
    triangles: &mut Vec<[usize; 3]>,
    dist: &dyn Fn([f64; 2]) -> f64,
    project: &dyn Fn([f64; 2]) -> [f64; 2],
    rho: f64,
) {
    triangles.retain(|tri| {
        let c = [
            (param[tri[0]][0] + param[tri[1]][0] + param[tri[2]][0]) / 3.0,
            (param[tri[0]][1] + param[tri[1]][1] + param[tri[2]][1]) / 3.0,
        ];
        dist(c) >= rho
    });
    let mut referenced = vec![false; param.len()];
    for tri in triangles.iter() {
        for &v in tri {
            referenced[v] = true;
        }
    }
    for (v, p) in param.iter_mut().enumerate() {
        if referenced[v] && dist(*p) < rho {
            *p = project(*p);
        }
    }
    // Compact away unreferenced vertices.
    let mut remap = vec![usize::MAX; param.len()];
    let mut new_param = Vec::new();
    for (v, &keep) in referenced.iter().enumerate() {
        if keep {
            remap[v] = new_param.len();
            new_param.push(param[v]);
        }
    }
    for tri in triangles.iter_mut() {
        for v in tri.iter_mut() {
            *v = remap[*v];
        }
    }
    *param = new_param;
}

fn cylinder_with_hole(n_angular: usize, n_axial: usize) -> Result<SurfaceMesh> {
    let radius = 0.5;
    let height = 1.0;
    let rho = 1.0 / 16.0; // hole radius (diameter 1/8) measured on the surface
    let circumference = 2.0 * PI * radius;
    if n_angular < 3 || n_axial < 1 {
        return Err(Error::InvalidParameter(
            "cylinder_with_hole needs n_angular >= 3, n_axial >= 1".into(),
        ));
    }
    let h = (circumference / n_angular as f64).max(height / n_axial as f64);
    if rho < 2.0 * h {
        return Err(Error::InvalidParameter(format!(
            "resolution too coarse for the hole: mesh width {h:.4} vs hole radius {rho:.4}"
        )));
    }
    // Parameter space: arclength s (periodic) by axial z.
    let mut param = Vec::new();
    for j in 0..=n_axial {
        let z = height * (j as f64 / n_axial as f64 - 0.5);
        for i in 0..n_angular {
            let s = circumference * i as f64 / n_angular as f64;
            param.push([s, z]);
        }
    }
    let idx = |i: usize, j: usize| j * n_angular + (i % n_angular);
    let mut triangles = Vec::new();
    for j in 0..n_axial {
        for i in 0..n_angular {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    // Hole centered on the negative y-axis (theta = 3 pi / 2), z = 0.025.
    let center = [circumference * 0.75, 0.025];
    let dist = |p: [f64; 2]| {
        let mut ds = (p[0] - center[0]).abs();
        if ds > circumference / 2.0 {
            ds = circumference - ds;
        }
        (ds * ds + (p[1] - center[1]) * (p[1] - center[1])).sqrt()
    };
    let project = |p: [f64; 2]| {
        let mut ds = p[0] - center[0];
        if ds > circumference / 2.0 {
            ds -= circumference;
        } else if ds < -circumference / 2.0 {
            ds += circumference;
        }
        let dz = p[1] - center[1];
        let d = (ds * ds + dz * dz).sqrt().max(1e-12);
        let mut s = center[0] + ds * rho / d;
        if s < 0.0 {
            s += circumference;
        } else if s >= circumference {
            s -= circumference;
        }
        [s, center[1] + dz * rho / d]
    };
    cut_hole(&mut param, &mut triangles, &dist, &project, rho);
    let vertices = param
        .iter()
        .map(|&[s, z]| {
            let th = s / radius;
            Vec3::new(radius * th.cos(), radius * th.sin(), z)
        })
        .collect();
    SurfaceMesh::new(vertices, triangles)
}

fn channel_with_hole(target_h: f64) -> Result<SurfaceMesh> {
    let (width, height) = (2.2, 0.41);
    let center = [0.2, 0.2];
    let rho = 0.05;
    if target_h <= 0.0 {
        return Err(Error::InvalidParameter("target_h must be positive".into()));
    }
    if rho < 2.0 * target_h {
        return Err(Error::InvalidParameter(format!(
            "target_h {target_h} too coarse for the obstacle radius {rho}"
        )));
    }
    let nx = (width / target_h).round().max(3.0) as usize;
    let ny = (height / target_h).round().max(3.0) as usize;
    let mut param = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            param.push([
                width * i as f64 / nx as f64,
                height * j as f64 / ny as f64,
            ]);
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            // Alternate the diagonal to avoid a global mesh bias.
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    let dist =
        |p: [f64; 2]| ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
    let project = |p: [f64; 2]| {
        let dx = p[0] - center[0];
        let dy = p[1] - center[1];
        let d = (dx * dx + dy * dy).sqrt().max(1e-12);
        [center[0] + dx * rho / d, center[1] + dy * rho / d]
    };
    cut_hole(&mut param, &mut triangles, &dist, &project, rho);
    let vertices = param.iter().map(|&[x, y]| Vec3::new(x, y, 0.0)).collect();
    SurfaceMesh::new(vertices, triangles)
}
