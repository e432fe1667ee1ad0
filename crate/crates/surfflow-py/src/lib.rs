//! Python bindings: mesh generation/loading, topology and Hodge queries,
//! and a small simulation driver around the homogeneous stepper.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use surfflow::fem::{self, FieldP0Vec, FieldP1};
use surfflow::hodge::{self, HarmonicBasis};
use surfflow::mesh::{generate_mesh, load_mesh, save_off, MeshFormat, MeshKind, SurfaceMesh, Vec3};
use surfflow::stepper::{CurvatureMode, FlowSolver, FlowState, SimConfig};

fn err(e: surfflow::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_field(mesh: &SurfaceMesh, v: Vec<(f64, f64, f64)>) -> PyResult<FieldP0Vec> {
    if v.len() != mesh.num_triangles() {
        return Err(PyValueError::new_err(format!(
            "expected one vector per triangle ({}), got {}",
            mesh.num_triangles(),
            v.len()
        )));
    }
    Ok(FieldP0Vec(
        v.into_iter().map(|(x, y, z)| Vec3::new(x, y, z)).collect(),
    ))
}

fn from_field(f: &FieldP0Vec) -> Vec<(f64, f64, f64)> {
    f.0.iter().map(|v| (v.x, v.y, v.z)).collect()
}

/// An oriented manifold triangle mesh.
#[pyclass]
#[derive(Clone)]
struct Mesh {
    inner: SurfaceMesh,
}

#[pymethods]
impl Mesh {
    /// Build a mesh from raw vertices and triangles.
    #[new]
    fn new(vertices: Vec<(f64, f64, f64)>, triangles: Vec<(usize, usize, usize)>) -> PyResult<Self> {
        let vs = vertices
            .into_iter()
            .map(|(x, y, z)| Vec3::new(x, y, z))
            .collect();
        let ts = triangles.into_iter().map(|(a, b, c)| [a, b, c]).collect();
        Ok(Mesh {
            inner: SurfaceMesh::new(vs, ts).map_err(err)?,
        })
    }

    /// Run one of the built-in generators, e.g.
    /// `Mesh.generate("torus", n_theta=32, n_phi=16)`.
    #[staticmethod]
    #[pyo3(signature = (kind, **params))]
    fn generate(kind: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut spec = format!("kind = \"{kind}\"\n");
        if let Some(p) = params {
            for (k, v) in p.iter() {
                let key: String = k.extract()?;
                if let Ok(i) = v.extract::<i64>() {
                    spec.push_str(&format!("{key} = {i}\n"));
                } else {
                    let f: f64 = v.extract()?;
                    spec.push_str(&format!("{key} = {f:?}\n"));
                }
            }
        }
        let mesh_kind: MeshKind = toml::from_str(&spec)
            .map_err(|e| PyValueError::new_err(format!("mesh parameters: {}", e.message())))?;
        Ok(Mesh {
            inner: generate_mesh(&mesh_kind).map_err(err)?,
        })
    }

    /// Load an OFF or OBJ file (format from the extension).
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let format = MeshFormat::from_path(path.as_ref()).map_err(err)?;
        Ok(Mesh {
            inner: load_mesh(path.as_ref(), format).map_err(err)?,
        })
    }

    fn save_off(&self, path: &str) -> PyResult<()> {
        save_off(&self.inner, path.as_ref()).map_err(err)
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn num_triangles(&self) -> usize {
        self.inner.num_triangles()
    }

    #[getter]
    fn euler_characteristic(&self) -> i64 {
        self.inner.euler_characteristic()
    }

    #[getter]
    fn betti(&self) -> usize {
        hodge::betti_dimension(&self.inner)
    }

    #[getter]
    fn is_closed(&self) -> bool {
        self.inner.is_closed()
    }

    #[getter]
    fn num_boundary_loops(&self) -> usize {
        self.inner.boundary_loops().len()
    }

    #[getter]
    fn total_area(&self) -> f64 {
        self.inner.total_area()
    }

    fn vertices(&self) -> Vec<(f64, f64, f64)> {
        self.inner.vertices().iter().map(|v| (v.x, v.y, v.z)).collect()
    }

    fn triangles(&self) -> Vec<(usize, usize, usize)> {
        self.inner
            .triangles()
            .iter()
            .map(|t| (t[0], t[1], t[2]))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(vertices={}, triangles={}, chi={}, betti={})",
            self.inner.num_vertices(),
            self.inner.num_triangles(),
            self.inner.euler_characteristic(),
            hodge::betti_dimension(&self.inner)
        )
    }
}

/// Dimension and orthonormality residual of the harmonic space.
#[pyfunction]
#[pyo3(signature = (mesh, seed = 0))]
fn harmonic_info(mesh: &Mesh, seed: u64) -> PyResult<(usize, f64)> {
    let basis = hodge::harmonic_basis(&mesh.inner, seed).map_err(err)?;
    Ok((basis.dim(), basis.gram_residual()))
}

/// A reproducible random tangential P0 field, one 3-vector per triangle.
#[pyfunction]
#[pyo3(signature = (mesh, seed = 0, draw = 0))]
fn random_field(mesh: &Mesh, seed: u64, draw: u64) -> Vec<(f64, f64, f64)> {
    from_field(&hodge::random_tangential_field(&mesh.inner, seed, draw))
}

/// Hodge-decompose a tangential field; returns a dict with the component
/// fields and their norms.
#[pyfunction]
#[pyo3(signature = (mesh, field, seed = 0))]
fn decompose<'py>(
    py: Python<'py>,
    mesh: &Mesh,
    field: Vec<(f64, f64, f64)>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = &mesh.inner;
    let x = to_field(m, field)?;
    let basis = hodge::harmonic_basis(m, seed).map_err(err)?;
    let comps = hodge::hodge_decompose(m, &basis, &x).map_err(err)?;
    let grad = fem::grad_cr(m, &comps.q);
    let rot = fem::rot_p1(m, &comps.psi);
    let harm = basis.combine(m, &comps.h_coeffs);
    let d = PyDict::new(py);
    d.set_item("grad", from_field(&grad))?;
    d.set_item("rot", from_field(&rot))?;
    d.set_item("harmonic", from_field(&harm))?;
    d.set_item("harmonic_coefficients", comps.h_coeffs.clone())?;
    d.set_item("norm", fem::norm_vec(m, &x))?;
    d.set_item("norm_grad", fem::norm_vec(m, &grad))?;
    d.set_item("norm_rot", fem::norm_vec(m, &rot))?;
    d.set_item("norm_harmonic", fem::norm_vec(m, &harm))?;
    d.set_item("residual", comps.residual)?;
    Ok(d)
}

/// Explicit stepping of the homogeneous (no-slip / closed-surface) schemes.
/// `nu = 0` selects the Euler algorithm.
#[pyclass]
struct Simulation {
    mesh: SurfaceMesh,
    basis: HarmonicBasis,
    config: SimConfig,
    state: Option<FlowState>,
}

impl Simulation {
    fn solver(&self) -> FlowSolver<'_> {
        FlowSolver::new(&self.mesh, &self.basis, self.config.clone())
    }

    fn current(&self) -> PyResult<&FlowState> {
        self.state
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("simulation not initialized; call set_velocity"))
    }
}

#[pymethods]
impl Simulation {
    #[new]
    #[pyo3(signature = (mesh, nu, dt, curvature = "angle_defect", seed = 0))]
    fn new(mesh: &Mesh, nu: f64, dt: f64, curvature: &str, seed: u64) -> PyResult<Self> {
        let curvature_mode = match curvature {
            "angle_defect" => CurvatureMode::AngleDefect,
            "zero" => CurvatureMode::Zero,
            other => match other.parse::<f64>() {
                Ok(c) => CurvatureMode::Constant(c),
                Err(_) => {
                    return Err(PyValueError::new_err(
                        "curvature must be 'angle_defect', 'zero', or a number",
                    ))
                }
            },
        };
        let basis = hodge::harmonic_basis(&mesh.inner, seed).map_err(err)?;
        Ok(Simulation {
            mesh: mesh.inner.clone(),
            basis,
            config: SimConfig {
                nu,
                dt,
                curvature_mode,
                ..Default::default()
            },
            state: None,
        })
    }

    /// Initialize from a tangential velocity field (the gradient part is
    /// discarded, as in the scheme).
    fn set_velocity(&mut self, field: Vec<(f64, f64, f64)>) -> PyResult<()> {
        let v = to_field(&self.mesh, field)?;
        self.state = Some(self.solver().ns_init(&v).map_err(err)?);
        Ok(())
    }

    /// Advance `n` steps.
    #[pyo3(signature = (n = 1))]
    fn step(&mut self, n: usize) -> PyResult<()> {
        let solver = self.solver();
        let mut s = self.current()?.clone();
        for _ in 0..n {
            s = solver.step(&s).map_err(err)?;
        }
        self.state = Some(s);
        Ok(())
    }

    #[getter]
    fn time(&self) -> PyResult<f64> {
        Ok(self.current()?.time)
    }

    #[getter]
    fn kinetic_energy(&self) -> PyResult<f64> {
        Ok(self.solver().kinetic_energy(self.current()?))
    }

    #[getter]
    fn divergence_residual(&self) -> PyResult<f64> {
        Ok(self.solver().divergence_residual(self.current()?))
    }

    fn vorticity(&self) -> PyResult<Vec<f64>> {
        Ok(self.current()?.omega.0.clone())
    }

    fn streamfunction(&self) -> PyResult<Vec<f64>> {
        Ok(self.current()?.psi.0.clone())
    }

    fn harmonic_coefficients(&self) -> PyResult<Vec<f64>> {
        Ok(self.current()?.h_coeffs.clone())
    }

    fn velocity(&self) -> PyResult<Vec<(f64, f64, f64)>> {
        Ok(from_field(&self.solver().velocity(self.current()?)))
    }

    fn mean_vorticity(&self) -> PyResult<f64> {
        let s = self.current()?;
        Ok(fem::mean_p1(&self.mesh, &FieldP1(s.omega.0.clone())))
    }
}

#[pymodule]
fn surfflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Mesh>()?;
    m.add_class::<Simulation>()?;
    m.add_function(wrap_pyfunction!(harmonic_info, m)?)?;
    m.add_function(wrap_pyfunction!(random_field, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    Ok(())
}
