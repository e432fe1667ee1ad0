//! File output: legacy ASCII VTK snapshots and CSV time series. Every file
//! is written to a temporary sibling and renamed into place, so outputs are
//! either complete or absent.

use crate::error::{Error, Result};
use crate::fem::{FieldCR, FieldP0Vec, FieldP1};
use crate::mesh::SurfaceMesh;
use std::io::Write as _;
use std::path::Path;

fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let io_err = |source: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(contents.as_bytes()).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    std::fs::rename(&tmp, path).map_err(io_err)
}

/// Average CR midpoint values onto vertices for display.
pub fn cr_to_vertices(mesh: &SurfaceMesh, f: &FieldCR) -> FieldP1 {
    let mut sum = vec![0.0; mesh.num_vertices()];
    let mut cnt = vec![0usize; mesh.num_vertices()];
    for (e, edge) in mesh.edges().iter().enumerate() {
        for v in edge.verts {
            sum[v] += f.0[e];
            cnt[v] += 1;
        }
    }
    for (s, c) in sum.iter_mut().zip(&cnt) {
        if *c > 0 {
            *s /= *c as f64;
        }
    }
    FieldP1(sum)
}

/// Legacy ASCII VTK unstructured grid: psi, omega, and vertex-averaged p*
/// as point data, the velocity as cell data.
pub fn write_vtk(
    mesh: &SurfaceMesh,
    psi: &FieldP1,
    omega: &FieldP1,
    p_star: &FieldCR,
    velocity: &FieldP0Vec,
    path: &Path,
) -> Result<()> {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("surfflow snapshot\n");
    s.push_str("ASCII\n");
    s.push_str("DATASET UNSTRUCTURED_GRID\n");
    let nv = mesh.num_vertices();
    let nt = mesh.num_triangles();
    s.push_str(&format!("POINTS {nv} double\n"));
    for p in mesh.vertices() {
        s.push_str(&format!("{:.17e} {:.17e} {:.17e}\n", p.x, p.y, p.z));
    }
    s.push_str(&format!("CELLS {nt} {}\n", 4 * nt));
    for t in mesh.triangles() {
        s.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
    }
    s.push_str(&format!("CELL_TYPES {nt}\n"));
    for _ in 0..nt {
        s.push_str("5\n");
    }
    s.push_str(&format!("POINT_DATA {nv}\n"));
    for (name, field) in [("psi", psi), ("omega", omega)] {
        s.push_str(&format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n"));
        for v in &field.0 {
            s.push_str(&format!("{v:.17e}\n"));
        }
    }
    let p_vert = cr_to_vertices(mesh, p_star);
    s.push_str("SCALARS p_star double 1\nLOOKUP_TABLE default\n");
    for v in &p_vert.0 {
        s.push_str(&format!("{v:.17e}\n"));
    }
    s.push_str(&format!("CELL_DATA {nt}\n"));
    s.push_str("VECTORS velocity double\n");
    for v in &velocity.0 {
        s.push_str(&format!("{:.17e} {:.17e} {:.17e}\n", v.x, v.y, v.z));
    }
    atomic_write(path, &s)
}

/// A CSV table accumulated in memory and written atomically at the end.
#[derive(Debug, Clone)]
pub struct CsvWriter {
    header: String,
    rows: Vec<String>,
}

impl CsvWriter {
    pub fn new(columns: &[&str]) -> Self {
        CsvWriter {
            header: columns.join(","),
            rows: Vec::new(),
        }
    }

    /// Full double precision; the shortest round-trip formatting keeps runs
    /// bitwise reproducible.
    pub fn push(&mut self, values: &[f64]) {
        let row: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
        self.rows.push(row.join(","));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = String::with_capacity(self.rows.len() * 32);
        s.push_str(&self.header);
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        atomic_write(path, &s)
    }
}
