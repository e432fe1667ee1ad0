//! Oriented triangulated surfaces embedded in 3-space.
//!
//! A [`SurfaceMesh`] is immutable after construction and carries all derived
//! per-element geometry: unit normals, areas, and the in-plane gradients of
//! the three P1 hat functions of each triangle.

mod generate;
mod io;

pub use generate::{generate_mesh, MeshKind};
pub use io::{load_mesh, save_off, MeshFormat};

use crate::error::{Error, Result};
use crate::fem::FieldP1;
use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

/// An edge of the triangulation with its one or two adjacent triangles.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    /// Endpoint vertex indices, `verts[0] < verts[1]`.
    pub verts: [usize; 2],
    pub tri: [usize; 2],
    pub tri_count: u8,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.tri_count == 1
    }
}

#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    /// For each triangle, the global edge index opposite each local vertex.
    tri_edges: Vec<[usize; 3]>,
    boundary_loops: Vec<Vec<usize>>,
    elem_normal: Vec<Vec3>,
    elem_area: Vec<f64>,
    hat_gradients: Vec<[Vec3; 3]>,
    boundary_vertex: Vec<bool>,
}

impl SurfaceMesh {
    /// Build a mesh from raw vertex positions and triangle index triples,
    /// validating manifoldness, orientation consistency, and element quality.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        if nv < 3 || triangles.is_empty() {
            return Err(Error::Mesh("mesh needs at least one triangle".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(Error::IndexOutOfRange(format!(
                        "triangle {t} references vertex {v} (only {nv} vertices)"
                    )));
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateTriangle(t));
            }
        }

        // Geometry.
        let mut elem_normal = Vec::with_capacity(triangles.len());
        let mut elem_area = Vec::with_capacity(triangles.len());
        let mut hat_gradients = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let p = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let cross = (p[1] - p[0]).cross(&(p[2] - p[0]));
            let two_area = cross.norm();
            let longest = (p[1] - p[0])
                .norm()
                .max((p[2] - p[1]).norm())
                .max((p[0] - p[2]).norm());
            if two_area <= 1e-12 * longest * longest {
                return Err(Error::DegenerateTriangle(t));
            }
            let normal = cross / two_area;
            let area = 0.5 * two_area;
            // grad of hat_i = N x (opposite edge vector) / (2 area)
            let grads = [
                normal.cross(&(p[2] - p[1])) / two_area,
                normal.cross(&(p[0] - p[2])) / two_area,
                normal.cross(&(p[1] - p[0])) / two_area,
            ];
            elem_normal.push(normal);
            elem_area.push(area);
            hat_gradients.push(grads);
        }

        // Edge table. Directed traversals detect orientation conflicts.
        use std::collections::HashMap;
        let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut directed_seen: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *edge_map.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        verts: [key.0, key.1],
                        tri: [t, usize::MAX],
                        tri_count: 0,
                    });
                    edges.len() - 1
                });
                match edges[e].tri_count {
                    0 => {
                        edges[e].tri = [t, usize::MAX];
                        edges[e].tri_count = 1;
                    }
                    1 => {
                        edges[e].tri[1] = t;
                        edges[e].tri_count = 2;
                    }
                    _ => return Err(Error::NonManifold(key.0, key.1)),
                }
                if directed_seen.insert((a, b), t).is_some() {
                    // Same traversal direction from two triangles.
                    return Err(Error::InconsistentOrientation(a, b));
                }
            }
        }

        // tri_edges: edge opposite local vertex i is (v_{i+1}, v_{i+2}).
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let mut te = [0usize; 3];
            for i in 0..3 {
                let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                te[i] = edge_map[&(a.min(b), a.max(b))];
            }
            tri_edges.push(te);
        }

        let mut boundary_vertex = vec![false; nv];
        for e in &edges {
            if e.is_boundary() {
                boundary_vertex[e.verts[0]] = true;
                boundary_vertex[e.verts[1]] = true;
            }
        }

        // Boundary loops with the induced orientation (surface to the left):
        // a boundary edge is traversed in the same direction as its single
        // adjacent triangle traverses it.
        let mut next: HashMap<usize, usize> = HashMap::new();
        for ((a, b), _t) in &directed_seen {
            let key = (*a.min(b), *a.max(b));
            let e = edge_map[&key];
            if edges[e].is_boundary() {
                if next.insert(*a, *b).is_some() {
                    return Err(Error::NonManifold(*a, *b));
                }
            }
        }
        let mut boundary_loops = Vec::new();
        let mut visited: std::collections::HashSet<usize> = std::collections::HashSet::new();
        let mut starts: Vec<usize> = next.keys().copied().collect();
        starts.sort_unstable();
        for start in starts {
            if visited.contains(&start) {
                continue;
            }
            let mut cycle = vec![start];
            visited.insert(start);
            let mut cur = next[&start];
            while cur != start {
                visited.insert(cur);
                cycle.push(cur);
                cur = *next
                    .get(&cur)
                    .ok_or_else(|| Error::Mesh("open boundary chain".into()))?;
            }
            boundary_loops.push(cycle);
        }

        Ok(Self {
            vertices,
            triangles,
            edges,
            tri_edges,
            boundary_loops,
            elem_normal,
            elem_area,
            hat_gradients,
            boundary_vertex,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }
    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
    pub fn tri_edges(&self) -> &[[usize; 3]] {
        &self.tri_edges
    }
    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }
    pub fn elem_normal(&self) -> &[Vec3] {
        &self.elem_normal
    }
    pub fn elem_area(&self) -> &[f64] {
        &self.elem_area
    }
    pub fn hat_gradients(&self) -> &[[Vec3; 3]] {
        &self.hat_gradients
    }
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }
    pub fn is_closed(&self) -> bool {
        self.boundary_loops.is_empty()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_triangles() as i64
    }

    pub fn total_area(&self) -> f64 {
        self.elem_area.iter().sum()
    }

    pub fn centroid(&self, t: usize) -> Vec3 {
        let tri = self.triangles[t];
        (self.vertices[tri[0]] + self.vertices[tri[1]] + self.vertices[tri[2]]) / 3.0
    }

    /// Shortest edge length; used by the time-step stability guard.
    pub fn min_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| (self.vertices[e.verts[1]] - self.vertices[e.verts[0]]).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Longest edge of one triangle (the local mesh width h_K).
    pub fn elem_diameter(&self, t: usize) -> f64 {
        let tri = self.triangles[t];
        let p = [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ];
        (p[1] - p[0])
            .norm()
            .max((p[2] - p[1]).norm())
            .max((p[0] - p[2]).norm())
    }

    /// Discrete Gaussian curvature: angle defect divided by one third of the
    /// incident triangle area. Interior vertices are measured against a full
    /// turn, boundary vertices against a half turn, so flat meshes get
    /// exactly zero curvature everywhere.
    pub fn gaussian_curvature_p1(&self) -> FieldP1 {
        let defect = self.angle_defects();
        let mut mixed_area = vec![0.0; self.num_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                mixed_area[v] += self.elem_area[t] / 3.0;
            }
        }
        FieldP1(
            defect
                .iter()
                .zip(&mixed_area)
                .map(|(&d, &a)| if a > 0.0 { d / a } else { 0.0 })
                .collect(),
        )
    }

    /// Angle defect per vertex (2 pi or pi minus incident angle sum).
    pub fn angle_defects(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.num_vertices()];
        for tri in &self.triangles {
            let p = [
                self.vertices[tri[0]],
                self.vertices[tri[1]],
                self.vertices[tri[2]],
            ];
            for i in 0..3 {
                let a = (p[(i + 1) % 3] - p[i]).normalize();
                let b = (p[(i + 2) % 3] - p[i]).normalize();
                sum[tri[i]] += a.dot(&b).clamp(-1.0, 1.0).acos();
            }
        }
        sum.iter()
            .enumerate()
            .map(|(v, &s)| {
                let full = if self.boundary_vertex[v] {
                    std::f64::consts::PI
                } else {
                    2.0 * std::f64::consts::PI
                };
                full - s
            })
            .collect()
    }

    /// Boundary edges (edge index, directed endpoints with the surface on the
    /// left, adjacent triangle).
    pub fn boundary_edges(&self) -> Vec<BoundaryEdge> {
        let mut out = Vec::new();
        for (e_idx, e) in self.edges.iter().enumerate() {
            if !e.is_boundary() {
                continue;
            }
            let t = e.tri[0];
            let tri = self.triangles[t];
            // Find the directed traversal of this edge within the triangle.
            let (mut from, mut to) = (e.verts[0], e.verts[1]);
            for i in 0..3 {
                if tri[i] == e.verts[1] && tri[(i + 1) % 3] == e.verts[0] {
                    (from, to) = (e.verts[1], e.verts[0]);
                }
            }
            out.push(BoundaryEdge {
                edge: e_idx,
                from,
                to,
                tri: t,
            });
        }
        out
    }

    /// Outward in-plane conormal of a boundary edge.
    pub fn boundary_conormal(&self, be: &BoundaryEdge) -> Vec3 {
        let d = (self.vertices[be.to] - self.vertices[be.from]).normalize();
        d.cross(&self.elem_normal[be.tri])
    }
}

/// A boundary edge with its induced direction (surface on the left).
#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    pub edge: usize,
    pub from: usize,
    pub to: usize,
    pub tri: usize,
}

impl BoundaryEdge {
    pub fn length(&self, mesh: &SurfaceMesh) -> f64 {
        (mesh.vertices()[self.to] - mesh.vertices()[self.from]).norm()
    }

    pub fn midpoint(&self, mesh: &SurfaceMesh) -> Vec3 {
        0.5 * (mesh.vertices()[self.to] + mesh.vertices()[self.from])
    }
}
