use std::path::PathBuf;

/// Errors produced anywhere in the solver stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error in {path} at line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("non-manifold edge ({0}, {1}): shared by more than two triangles")]
    NonManifold(usize, usize),
    #[error("inconsistent triangle orientation across edge ({0}, {1})")]
    InconsistentOrientation(usize, usize),
    #[error("degenerate (zero-area) triangle {0}")]
    DegenerateTriangle(usize),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("linear solver failed to converge: {iterations} iterations, relative residual {residual:.3e}")]
    SolverDiverged { iterations: usize, residual: f64 },
    #[error("NaN encountered during linear solve")]
    SolverNan,
    #[error("harmonic candidate set is numerically rank-deficient after {redraws} redraws")]
    LinearDependence { redraws: usize },
    #[error("inconsistent Neumann data: net flux {0:.3e} with empty pressure patch")]
    InconsistentNeumannData(f64),
    #[error("solution blew up (NaN/Inf) at t = {time}, step {step}")]
    BlowUp { time: f64, step: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;
