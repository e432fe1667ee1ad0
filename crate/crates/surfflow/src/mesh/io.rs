//! OFF and OBJ loading (triangles only) and OFF export.

use super::{SurfaceMesh, Vec3};
use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("obj") => Ok(MeshFormat::Obj),
            Some("off") => Ok(MeshFormat::Off),
            other => Err(Error::Config(format!(
                "cannot infer mesh format from extension {other:?}"
            ))),
        }
    }
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<SurfaceMesh> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (vertices, triangles) = match format {
        MeshFormat::Off => parse_off(&text, path)?,
        MeshFormat::Obj => parse_obj(&text, path)?,
    };
    SurfaceMesh::new(vertices, triangles)
}

fn parse_off(text: &str, path: &Path) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let err = |line: usize, msg: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.to_string(),
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = lines.next().ok_or_else(|| err(1, "empty file"))?;
    let mut rest_of_header: Option<&str> = None;
    if header != "OFF" {
        // Allow the counts on the same line as the keyword.
        if let Some(stripped) = header.strip_prefix("OFF") {
            rest_of_header = Some(stripped.trim());
        } else {
            return Err(err(ln, "missing OFF header"));
        }
    }
    let (ln, counts_line) = match rest_of_header {
        Some(r) if !r.is_empty() => (ln, r),
        _ => lines.next().ok_or_else(|| err(ln, "missing count line"))?,
    };
    let counts: Vec<usize> = counts_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(ln, "bad count")))
        .collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(err(ln, "count line needs vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| err(0, "unexpected EOF in vertices"))?;
        let xyz: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|t| t.parse().map_err(|_| err(ln, "bad vertex coordinate")))
            .collect::<Result<_>>()?;
        if xyz.len() != 3 {
            return Err(err(ln, "vertex needs 3 coordinates"));
        }
        vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| err(0, "unexpected EOF in faces"))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(ln, "bad face index")))
            .collect::<Result<_>>()?;
        if idx.is_empty() || idx[0] != idx.len() - 1 {
            return Err(err(ln, "face count prefix mismatch"));
        }
        if idx[0] != 3 {
            return Err(err(ln, "only triangular faces are supported"));
        }
        triangles.push([idx[1], idx[2], idx[3]]);
    }
    Ok((vertices, triangles))
}

fn parse_obj(text: &str, path: &Path) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let err = |line: usize, msg: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.to_string(),
    };
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let xyz: Vec<f64> = toks
                    .clone()
                    .take(3)
                    .map(|t| t.parse().map_err(|_| err(ln, "bad vertex coordinate")))
                    .collect::<Result<_>>()?;
                if xyz.len() != 3 {
                    return Err(err(ln, "vertex needs 3 coordinates"));
                }
                vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                // Texture/normal indices after '/' are ignored.
                let idx: Vec<usize> = toks
                    .map(|t| {
                        let first = t.split('/').next().unwrap_or("");
                        first
                            .parse::<i64>()
                            .map_err(|_| err(ln, "bad face index"))
                            .and_then(|v| {
                                if v >= 1 {
                                    Ok((v - 1) as usize)
                                } else {
                                    Err(err(ln, "negative OBJ indices are not supported"))
                                }
                            })
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(err(ln, "only triangular faces are supported"));
                }
                triangles.push([idx[0], idx[1], idx[2]]);
            }
            // Ignore normals, texture coords, groups, materials.
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

pub fn save_off(mesh: &SurfaceMesh, path: &Path) -> Result<()> {
    let mut buf = String::new();
    buf.push_str("OFF\n");
    buf.push_str(&format!(
        "{} {} {}\n",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.num_edges()
    ));
    for v in mesh.vertices() {
        buf.push_str(&format!("{:.17} {:.17} {:.17}\n", v.x, v.y, v.z));
    }
    for t in mesh.triangles() {
        buf.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
    }
    let tmp = path.with_extension("off.tmp");
    let write = |p: &Path| -> std::io::Result<()> {
        let mut f = std::fs::File::create(p)?;
        f.write_all(buf.as_bytes())?;
        f.sync_all()
    };
    write(&tmp).and_then(|_| std::fs::rename(&tmp, path)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
