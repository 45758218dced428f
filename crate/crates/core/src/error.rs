use thiserror::Error;

/// Errors raised by the homotopy engine.
///
/// Variants map one-to-one onto the failure modes of the pipeline stages so
/// that the CLI and the C ABI can report a stable kind string / code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve at sample {index}: {reason}")]
    InvalidCurve { index: usize, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("indeterminate winding: point ({x}, {y}) lies within {tol:e} of the curve")]
    IndeterminateWinding { x: f64, y: f64, tol: f64 },

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("mesh quality: {0}")]
    MeshQuality(String),

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("descent failure: {0}")]
    DescentFailure(String),

    #[error("sweep aborted at epsilon = {epsilon}: {source}")]
    SweepAborted {
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("continuation did not converge: {reason}")]
    NonConvergence { reason: String, monitors: Vec<crate::continuation::MonitorRow> },

    #[error(
        "discontinuous boundary parametrization: jump {jump} between boundary vertices {from} and {to} exceeds {tol}"
    )]
    DiscontinuousParam { from: usize, to: usize, jump: f64, tol: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("output error: {0}")]
    Output(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidCurve { .. } => "invalid-curve",
            Error::Domain(_) => "domain",
            Error::Config(_) => "configuration",
            Error::Precondition(_) => "precondition",
            Error::IndeterminateWinding { .. } => "indeterminate-winding",
            Error::DegenerateCurve(_) => "degenerate-curve",
            Error::MeshQuality(_) => "mesh-quality",
            Error::Solver(_) => "solver",
            Error::DescentFailure(_) => "descent-failure",
            Error::SweepAborted { .. } => "sweep-aborted",
            Error::NonConvergence { .. } => "non-convergence",
            Error::DiscontinuousParam { .. } => "discontinuous-parametrization",
            Error::Parse(_) => "parse",
            Error::Output(_) => "output",
        }
    }

    /// The innermost error, looking through sweep aborts.
    pub fn root(&self) -> &Error {
        match self {
            Error::SweepAborted { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
