use thiserror::Error;

/// Errors raised by the geometry, definiteness, witness and sampling layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point outside chart: {0}")]
    OutOfChart(String),

    #[error("no closed-form geometry for {0}; use the discrete geodesic module")]
    AnalyticUnavailable(&'static str),

    #[error("space has no designated circle factor")]
    NoCircleFactor,

    #[error("points coincide")]
    CoincidentPoints,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("degenerate chart: {0}")]
    DegenerateChart(String),

    #[error("vertices {0} and {1} are not connected")]
    Disconnected(usize, usize),

    #[error("grid refinement did not converge after {0} doublings")]
    NoConvergence(usize),

    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),

    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("configuration is not critical: |form| = {form:e} exceeds tolerance {tol:e}")]
    NotCritical { form: f64, tol: f64 },

    #[error("direction is not perpendicular to the shortest-direction span (residual {0:e})")]
    DirectionNotPerpendicular(f64),

    #[error("no positive perturbed form found over the epsilon schedule")]
    NoPositivityFound,

    #[error("condition (G) holds for the antipodal quadruple; witness pipeline inapplicable")]
    GNotFailing,

    #[error("antipodal offset {0} is degenerate (points coincide)")]
    DegenerateOffset(f64),

    #[error("clipped eigenvalue mass {clipped:e} exceeds {limit:e}; covariance is not positive semidefinite")]
    ExcessClipping { clipped: f64, limit: f64 },

    #[error("variogram check needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
