//! Run configuration (TOML) and the end-to-end simulation driver.
//!
//! A run is described by a config file with sections [mesh], [sim],
//! [force], [initial], [boundary], and [output]. Boundary patches are
//! selected by axis-aligned bounding boxes or boundary-loop indices, or via
//! the ready-made `schaefer_turek` preset. Runs are deterministic for a
//! fixed seed.

use crate::bcs::{
    BoundaryData, BoundaryPatchLabels, MixedBcSetup, MixedFlowSolver, PnLabel, WtLabel,
};
use crate::bench::{self, ForceSeries, StBenchParams};
use crate::error::{Error, Result};
use crate::fem::{self, FieldCR, FieldP0Vec};
use crate::hodge::{betti_dimension, harmonic_basis, HarmonicBasis};
use crate::mesh::{generate_mesh, load_mesh, MeshFormat, MeshKind, SurfaceMesh};
use crate::output::{write_vtk, CsvWriter};
use crate::stepper::{CurvatureMode, FlowSolver, FlowState, Force, SimConfig};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub mesh: MeshSection,
    pub sim: SimSection,
    #[serde(default)]
    pub force: ForceSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub boundary: Option<BoundarySection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub file: Option<PathBuf>,
    pub generator: Option<MeshKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    NavierStokes,
    Euler,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub scheme: Scheme,
    #[serde(default)]
    pub nu: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_curvature")]
    pub curvature: CurvatureSpec,
    #[serde(default = "default_tol")]
    pub solver_tol: f64,
}

fn default_curvature() -> CurvatureSpec {
    CurvatureSpec::AngleDefect
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurvatureSpec {
    AngleDefect,
    Zero,
    Constant { value: f64 },
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForceSpec {
    #[default]
    Zero,
    Constant {
        vector: [f64; 3],
    },
    /// Constant azimuthal forcing of magnitude 0.1 (the pierced ring).
    PiercedRing,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Zero state; with boundary data present, the lifting alone.
    #[default]
    Zero,
    KhTorus {
        #[serde(default = "kh_v_inf")]
        v_inf: f64,
        #[serde(default = "kh_delta0")]
        delta0: f64,
        #[serde(default = "kh_c_n")]
        c_n: f64,
    },
}

fn kh_v_inf() -> f64 {
    1.0
}

fn kh_delta0() -> f64 {
    0.2
}

fn kh_c_n() -> f64 {
    0.02
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    /// "schaefer_turek": outlet pressure/tangential, parabolic inflow.
    pub preset: Option<String>,
    #[serde(default = "default_beta")]
    pub stabilization_beta: f64,
    #[serde(default)]
    pub patches: Vec<PatchRule>,
}

fn default_beta() -> f64 {
    1.0
}

/// Assigns labels/data to the boundary edges whose midpoint satisfies the
/// bounding box and loop filters. Rules apply in order over the default
/// normal-velocity/tangential labeling with zero data.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchRule {
    pub xmin: Option<f64>,
    pub xmax: Option<f64>,
    pub ymin: Option<f64>,
    pub ymax: Option<f64>,
    pub zmin: Option<f64>,
    pub zmax: Option<f64>,
    /// Index into the mesh's boundary loops.
    #[serde(rename = "loop")]
    pub loop_index: Option<usize>,
    #[serde(default)]
    pub pressure: bool,
    #[serde(default)]
    pub vorticity: bool,
    #[serde(default)]
    pub g_n: f64,
    #[serde(default)]
    pub g_t: f64,
    #[serde(default)]
    pub g_omega: f64,
    #[serde(default)]
    pub g_p: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Write a VTK snapshot every this many steps (absent: none).
    pub vtk_stride: Option<usize>,
    #[serde(default = "default_csv_stride")]
    pub csv_stride: usize,
    #[serde(default = "default_diag_name")]
    pub diagnostics_csv: String,
    #[serde(default = "default_forces_name")]
    pub forces_csv: String,
    /// Add a vortex-census column to the diagnostics.
    #[serde(default)]
    pub census: bool,
}

fn default_csv_stride() -> usize {
    1
}

fn default_diag_name() -> String {
    "diagnostics.csv".into()
}

fn default_forces_name() -> String {
    "forces.csv".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            vtk_stride: None,
            csv_stride: 1,
            diagnostics_csv: default_diag_name(),
            forces_csv: default_forces_name(),
            census: false,
        }
    }
}

impl RunConfig {
    /// Validate semantic constraints; returns every violation at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        match (&self.mesh.file, &self.mesh.generator) {
            (None, None) => problems.push("mesh: either file or generator is required".into()),
            (Some(_), Some(_)) => {
                problems.push("mesh: file and generator are mutually exclusive".into())
            }
            _ => {}
        }
        if !(self.sim.dt > 0.0) {
            problems.push(format!("sim.dt: must be positive, got {}", self.sim.dt));
        }
        if !(self.sim.t_end > self.sim.dt) {
            problems.push(format!(
                "sim.t_end: must exceed sim.dt, got {}",
                self.sim.t_end
            ));
        }
        if self.sim.nu < 0.0 {
            problems.push(format!("sim.nu: must be nonnegative, got {}", self.sim.nu));
        }
        if self.sim.scheme == Scheme::NavierStokes && self.sim.nu == 0.0 {
            problems.push("sim.nu: navier_stokes scheme requires nu > 0".into());
        }
        if !(self.sim.solver_tol > 0.0) {
            problems.push("sim.solver_tol: must be positive".into());
        }
        if self.output.csv_stride < 1 {
            problems.push("output.csv_stride: must be at least 1".into());
        }
        if self.output.vtk_stride == Some(0) {
            problems.push("output.vtk_stride: must be at least 1".into());
        }
        if let Some(b) = &self.boundary {
            if let Some(p) = &b.preset {
                if p != "schaefer_turek" {
                    problems.push(format!("boundary.preset: unknown preset '{p}'"));
                }
                if !b.patches.is_empty() {
                    problems.push("boundary: preset and patches are mutually exclusive".into());
                }
            }
            if !(b.stabilization_beta >= 0.0) {
                problems.push("boundary.stabilization_beta: must be nonnegative".into());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    /// Effective viscosity: the Euler scheme ignores the nu field.
    pub fn effective_nu(&self) -> f64 {
        match self.sim.scheme {
            Scheme::Euler => 0.0,
            Scheme::NavierStokes => self.sim.nu,
        }
    }

    pub fn sim_config(&self, mesh: &SurfaceMesh) -> SimConfig {
        SimConfig {
            nu: self.effective_nu(),
            dt: self.sim.dt,
            t_end: self.sim.t_end,
            force: match &self.force {
                ForceSpec::Zero => Force::Zero,
                ForceSpec::Constant { vector } => {
                    Force::ConstantAmbient(crate::mesh::Vec3::new(vector[0], vector[1], vector[2]))
                }
                ForceSpec::PiercedRing => Force::PerElement(bench::pierced_ring_force(mesh)),
            },
            curvature_mode: match self.sim.curvature {
                CurvatureSpec::AngleDefect => CurvatureMode::AngleDefect,
                CurvatureSpec::Zero => CurvatureMode::Zero,
                CurvatureSpec::Constant { value } => CurvatureMode::Constant(value),
            },
            solver_tol: self.sim.solver_tol,
        }
    }
}

/// Parse and validate a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let config: RunConfig = toml::from_str(&text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
            .unwrap_or(0);
        Error::Config(format!("{} at line {line}: {}", path.display(), e.message()))
    })?;
    config.validate()?;
    Ok(config)
}

/// Load or generate the mesh of a config.
pub fn build_mesh(config: &RunConfig) -> Result<SurfaceMesh> {
    if let Some(path) = &config.mesh.file {
        let format = MeshFormat::from_path(path)?;
        load_mesh(path, format)
    } else if let Some(kind) = &config.mesh.generator {
        generate_mesh(kind)
    } else {
        Err(Error::Config("mesh: no source specified".into()))
    }
}

/// Build labels and data from the boundary section.
pub fn build_boundary(
    mesh: &SurfaceMesh,
    section: &BoundarySection,
) -> Result<(BoundaryPatchLabels, BoundaryData)> {
    if section.preset.as_deref() == Some("schaefer_turek") {
        let params = StBenchParams::default();
        return Ok((
            bench::st_labels(mesh, &params),
            bench::st_boundary_data(mesh, &params),
        ));
    }
    let bedges = mesh.boundary_edges();
    // Loop index per boundary edge via the from-vertex.
    let mut vertex_loop = std::collections::HashMap::new();
    for (li, lp) in mesh.boundary_loops().iter().enumerate() {
        for &v in lp {
            vertex_loop.insert(v, li);
        }
    }
    let mut labels = BoundaryPatchLabels::homogeneous(mesh);
    let mut data = BoundaryData::zero(mesh);
    for rule in &section.patches {
        for (i, be) in bedges.iter().enumerate() {
            let m = be.midpoint(mesh);
            let in_box = rule.xmin.is_none_or(|v| m.x >= v)
                && rule.xmax.is_none_or(|v| m.x <= v)
                && rule.ymin.is_none_or(|v| m.y >= v)
                && rule.ymax.is_none_or(|v| m.y <= v)
                && rule.zmin.is_none_or(|v| m.z >= v)
                && rule.zmax.is_none_or(|v| m.z <= v);
            let in_loop = rule
                .loop_index
                .is_none_or(|li| vertex_loop.get(&be.from) == Some(&li));
            if !(in_box && in_loop) {
                continue;
            }
            labels.pn[i] = if rule.pressure {
                PnLabel::Pressure
            } else {
                PnLabel::NormalVelocity
            };
            labels.wt[i] = if rule.vorticity {
                WtLabel::Vorticity
            } else {
                WtLabel::Tangential
            };
            data.g_n[i] = rule.g_n;
            data.g_t[i] = rule.g_t;
            data.g_omega[i] = rule.g_omega;
            data.g_p[i] = rule.g_p;
        }
    }
    Ok((labels, data))
}

/// Options supplied by the command line on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub final_energy: f64,
    pub diagnostics_path: PathBuf,
    pub forces_path: Option<PathBuf>,
    pub force_series: Option<ForceSeries>,
    pub census_peak: Option<usize>,
    pub harmonic_dim: usize,
}

enum Driver<'a> {
    Plain(FlowSolver<'a>),
    Mixed(MixedFlowSolver<'a>),
}

impl Driver<'_> {
    fn step(&self, state: &FlowState) -> Result<FlowState> {
        match self {
            Driver::Plain(s) => s.step(state),
            Driver::Mixed(s) => s.ns_step(state),
        }
    }

    fn velocity(&self, state: &FlowState) -> FieldP0Vec {
        match self {
            Driver::Plain(s) => s.velocity(state),
            Driver::Mixed(s) => s.velocity(state),
        }
    }

    fn recover_pressure(&self, state: &FlowState) -> Result<FieldCR> {
        match self {
            Driver::Plain(s) => s.recover_pressure(state),
            Driver::Mixed(s) => s.recover_pressure(state),
        }
    }

    fn kinetic_energy(&self, state: &FlowState) -> f64 {
        match self {
            Driver::Plain(s) => s.kinetic_energy(state),
            Driver::Mixed(s) => s.kinetic_energy(state),
        }
    }
}

fn initial_velocity(mesh: &SurfaceMesh, spec: &InitialSpec) -> Result<Option<FieldP0Vec>> {
    match spec {
        InitialSpec::Zero => Ok(None),
        InitialSpec::KhTorus { v_inf, delta0, c_n } => Ok(Some(bench::kh_torus_initial_velocity(
            mesh,
            &bench::KhParams {
                v_inf: *v_inf,
                delta0: *delta0,
                c_n: *c_n,
            },
        )?)),
    }
}

/// Run a configured simulation end to end, writing diagnostics (and forces
/// when an obstacle is present) into the output directory.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunSummary> {
    config.validate()?;
    if let Some(t) = opts.threads {
        if t > 1 {
            log::info!("thread count {t} requested; assemblies run sequentially");
        }
    }
    let mesh = build_mesh(config)?;
    let seed = opts.seed.unwrap_or(config.seed);
    let sim = config.sim_config(&mesh);
    std::fs::create_dir_all(&opts.out_dir).map_err(|source| Error::Io {
        path: opts.out_dir.clone(),
        source,
    })?;

    // Boundary setup decides between the homogeneous and the mixed path.
    let boundary = config
        .boundary
        .as_ref()
        .map(|b| build_boundary(&mesh, b).map(|(l, d)| (l, d, b.stabilization_beta)))
        .transpose()?;

    let basis: HarmonicBasis;
    let driver;
    let mut state;
    let mut obstacle: Option<(Vec<usize>, StBenchParams)> = None;
    match &boundary {
        None => {
            basis = harmonic_basis(&mesh, seed)?;
            let solver = FlowSolver::new(&mesh, &basis, sim.clone());
            state = match initial_velocity(&mesh, &config.initial)? {
                None => FlowState::zero(&mesh, &basis),
                Some(v0) => solver.ns_init(&v0)?,
            };
            driver = Driver::Plain(solver);
        }
        Some((labels, data, beta)) => {
            basis = crate::bcs::mixed_harmonic_basis(&mesh, labels, seed)?;
            let setup = MixedBcSetup::build(&mesh, labels.clone(), data.clone())?;
            let solver = MixedFlowSolver::new(&mesh, &basis, setup, sim.clone(), *beta)?;
            state = match initial_velocity(&mesh, &config.initial)? {
                None => solver.init_impulsive()?,
                Some(v0) => solver.init_from_velocity(&v0)?,
            };
            if config
                .boundary
                .as_ref()
                .is_some_and(|b| b.preset.as_deref() == Some("schaefer_turek"))
            {
                let params = StBenchParams {
                    nu: sim.nu,
                    ..StBenchParams::default()
                };
                obstacle = Some((bench::obstacle_edges(&mesh, &params)?, params));
            }
            driver = Driver::Mixed(solver);
        }
    }

    let steps = (config.sim.t_end / config.sim.dt).round() as usize;
    let mut diag_cols = vec!["t", "e_kin", "mean_omega"];
    if obstacle.is_some() {
        diag_cols.extend(["cd", "cl"]);
    }
    if config.output.census {
        diag_cols.push("census");
    }
    let mut diag = CsvWriter::new(&diag_cols);
    let mut forces = CsvWriter::new(&["t", "cd", "cl"]);
    let mut series = ForceSeries::default();
    let mut census_peak = None;

    let record =
        |state: &FlowState, driver: &Driver, forces: &mut CsvWriter, diag: &mut CsvWriter,
         series: &mut ForceSeries, census_peak: &mut Option<usize>|
         -> Result<()> {
            let mut row = vec![
                state.time,
                driver.kinetic_energy(state),
                fem::mean_p1(&mesh, &state.omega),
            ];
            if let Some((obst, params)) = &obstacle {
                let p_star = driver.recover_pressure(state)?;
                let (fd, fl) = bench::obstacle_force(&mesh, obst, &p_star, &state.omega, sim.nu);
                let (cd, cl) = bench::coefficients(fd, fl, params);
                row.extend([cd, cl]);
                forces.push(&[state.time, cd, cl]);
                series.push(state.time, cd, cl);
            }
            if config.output.census {
                let c = bench::vortex_census(&state.omega, &mesh, 0.3);
                *census_peak = Some(census_peak.unwrap_or(0).max(c));
                row.push(c as f64);
            }
            diag.push(&row);
            Ok(())
        };

    record(&state, &driver, &mut forces, &mut diag, &mut series, &mut census_peak)?;
    let mut vtk_count = 0usize;
    for step in 1..=steps {
        state = driver.step(&state)?;
        if step % config.output.csv_stride == 0 || step == steps {
            record(&state, &driver, &mut forces, &mut diag, &mut series, &mut census_peak)?;
        }
        if let Some(stride) = config.output.vtk_stride {
            if step % stride == 0 || step == steps {
                let p_star = driver.recover_pressure(&state)?;
                let v = driver.velocity(&state);
                let path = opts.out_dir.join(format!("snapshot_{step:06}.vtk"));
                write_vtk(&mesh, &state.psi, &state.omega, &p_star, &v, &path)?;
                vtk_count += 1;
            }
        }
    }
    let _ = vtk_count;

    let diagnostics_path = opts.out_dir.join(&config.output.diagnostics_csv);
    diag.write(&diagnostics_path)?;
    let forces_path = if obstacle.is_some() {
        let p = opts.out_dir.join(&config.output.forces_csv);
        forces.write(&p)?;
        Some(p)
    } else {
        None
    };

    Ok(RunSummary {
        steps,
        final_time: state.time,
        final_energy: driver.kinetic_energy(&state),
        diagnostics_path,
        forces_path,
        force_series: obstacle.as_ref().map(|_| series),
        census_peak,
        harmonic_dim: basis.dim(),
    })
}

/// Exit code classification: config 2, mesh 3, solver 4, blow-up 5.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::NonManifold(..)
        | Error::InconsistentOrientation(..)
        | Error::DegenerateTriangle(_)
        | Error::Mesh(_)
        | Error::InvalidParameter(_)
        | Error::IndexOutOfRange(_) => 3,
        Error::SolverDiverged { .. }
        | Error::SolverNan
        | Error::LinearDependence { .. }
        | Error::InconsistentNeumannData(_) => 4,
        Error::BlowUp { .. } => 5,
        Error::Other(_) => 1,
    }
}

/// Unused betti hook kept close to the driver for the CLI info command.
pub fn topology_line(mesh: &SurfaceMesh) -> String {
    format!(
        "V = {}, E = {}, T = {}, chi = {}, boundary loops = {}, b1 = {}",
        mesh.num_vertices(),
        mesh.num_edges(),
        mesh.num_triangles(),
        mesh.euler_characteristic(),
        mesh.boundary_loops().len(),
        betti_dimension(mesh),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(text: &str) -> Result<RunConfig> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, text).unwrap();
        parse_config(&path)
    }

    #[test]
    fn minimal_torus_euler_config() {
        let cfg = parse_str(
            r#"
[mesh.generator]
kind = "torus"
n_theta = 8
n_phi = 8

[sim]
scheme = "euler"
dt = 1e-3
t_end = 0.01
"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.effective_nu(), 0.0);
        assert_eq!(cfg.output.csv_stride, 1);
        assert!(cfg.boundary.is_none());
        assert!(matches!(cfg.force, ForceSpec::Zero));
    }

    #[test]
    fn zero_dt_rejected_naming_field() {
        let err = parse_str(
            r#"
[mesh.generator]
kind = "torus"
n_theta = 8
n_phi = 8

[sim]
scheme = "euler"
dt = 0.0
t_end = 1.0
"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("sim.dt"), "{msg}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_str(
            r#"
[mesh.generator]
kind = "torus"
n_theta = 8
n_phi = 8

[sim]
scheme = "euler"
dt = 1e-3
t_end = 1.0
frobnicate = true
"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_str("[mesh\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn shipped_st_config_reynolds() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/st2d2.cfg");
        let cfg = parse_config(&path).unwrap();
        let params = StBenchParams {
            nu: cfg.sim.nu,
            ..StBenchParams::default()
        };
        assert!((params.reynolds() - 100.0).abs() < 1e-9);
        assert_eq!(
            cfg.boundary.unwrap().preset.as_deref(),
            Some("schaefer_turek")
        );
    }

    #[test]
    fn shipped_benchmark_configs_parse() {
        for name in ["pierced_ring.cfg", "kh_torus.cfg"] {
            let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../configs/{name}"));
            parse_config(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn zero_run_produces_zero_outputs() {
        let cfg = parse_str(
            r#"
[mesh.generator]
kind = "torus"
n_theta = 8
n_phi = 8

[sim]
scheme = "navier_stokes"
nu = 0.01
dt = 1e-3
t_end = 5e-3
"#,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            out_dir: dir.path().to_path_buf(),
            ..Default::default()
        };
        let summary = run(&cfg, &opts).unwrap();
        assert_eq!(summary.steps, 5);
        assert!(summary.final_energy < 1e-20);
        let text = std::fs::read_to_string(&summary.diagnostics_path).unwrap();
        for line in text.lines().skip(1) {
            let e_kin: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert_eq!(e_kin, 0.0);
        }
    }

    #[test]
    fn deterministic_repeat_runs() {
        let cfg_text = r#"
seed = 7

[mesh.generator]
kind = "torus"
n_theta = 10
n_phi = 10

[sim]
scheme = "euler"
dt = 1e-3
t_end = 0.01

[initial]
kind = "kh_torus"
"#;
        let read = || {
            let cfg = parse_str(cfg_text).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let opts = RunOptions {
                out_dir: dir.path().to_path_buf(),
                ..Default::default()
            };
            let s = run(&cfg, &opts).unwrap();
            std::fs::read_to_string(&s.diagnostics_path).unwrap()
        };
        assert_eq!(read(), read());
    }

    #[test]
    fn unstable_dt_exits_blow_up() {
        let cfg = parse_str(
            r#"
[mesh.generator]
kind = "torus"
n_theta = 16
n_phi = 16

[sim]
scheme = "navier_stokes"
nu = 1.0
dt = 0.5
t_end = 50.0

[initial]
kind = "kh_torus"
"#,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            out_dir: dir.path().to_path_buf(),
            ..Default::default()
        };
        match run(&cfg, &opts) {
            Err(e @ Error::BlowUp { .. }) => assert_eq!(exit_code(&e), 5),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
