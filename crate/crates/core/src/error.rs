use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point was passed that lies outside the required domain
    /// (open unit disk, grid radius cap, ...).
    #[error("point outside domain: {0}")]
    Domain(String),

    /// Evaluation hit a singularity of the map (e.g. a Möbius pole).
    #[error("singularity encountered: {0}")]
    Singularity(String),

    /// A configuration parameter is outside its documented range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Degenerate geometric input (coincident points, empty polyline).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A geometric construction required by the decomposition failed
    /// (intersecting cuts, unbounded cut length, support checks).
    #[error("construction failed: {0}")]
    Construction(String),

    /// Discretization too coarse for the requested operation.
    #[error("insufficient resolution: {0}")]
    Resolution(String),

    /// Iterative solver did not reach the requested residual.
    #[error("solver did not converge: residual {residual:.3e} after {sweeps} sweeps")]
    NoConvergence { residual: f64, sweeps: usize },

    /// Internal invariant violated (e.g. disconnected grid).
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
