use thiserror::Error;

/// Errors raised across the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("normal projection is ambiguous at ({x:.6}, {y:.6}): {reason}")]
    AmbiguousProjection { x: f64, y: f64, reason: String },
    #[error("ray from ({x:.6}, {y:.6}) at angle {theta:.6} has no boundary intersection")]
    NoIntersection { x: f64, y: f64, theta: f64 },
    #[error("tubular coordinate r = {r} lies outside the band |r| < {limit}")]
    OutOfBand { r: f64, limit: f64 },
    #[error("transported curve is no longer star-shaped: {0}")]
    StarShapeLost(String),
    #[error("quadrature did not converge: estimated error {estimate:e} > {target:e}")]
    QuadratureNotConverged { estimate: f64, target: f64 },
    #[error("assembly failed: {0}")]
    AssemblyFailed(String),
    #[error("stiffness matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("trace fit is ill conditioned (condition number {0:e})")]
    IllConditionedFit(f64),
    #[error("degenerate trace profile: {0}")]
    DegenerateProfile(String),
    #[error("line search failed after {0} halvings")]
    LineSearchFailed(usize),
    #[error("reflected cap is empty (Lambda = {lambda}, lambda0 = {lambda0})")]
    EmptyCap { lambda: f64, lambda0: f64 },
    #[error("reflection difference changes sign along the probe ray")]
    SignChange,
    #[error("reflection difference vanishes identically (symmetric configuration)")]
    SymmetricConfiguration,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
