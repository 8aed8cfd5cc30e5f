//! Error types, split by the phase that raises them: configuration and
//! validation, time stepping, and sweep aggregation.

use thiserror::Error;

/// Rejected model, grid, or run configuration.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("grid needs at least 16 cells, got {0}")]
    GridTooCoarse(usize),
    #[error("grid extent is empty: x_min = {x_min}, x_max = {x_max}")]
    EmptyDomain { x_min: f64, x_max: f64 },
    #[error("slope {s} lies outside the invertible range [{lo}, {hi}]")]
    SlopeOutOfRange { s: f64, lo: f64, hi: f64 },
    #[error("datum support (radius {support}) does not fit inside [{x_min}, {x_max}]")]
    SupportTooWide { support: f64, x_min: f64, x_max: f64 },
    #[error("datum support (radius {support}) is closer than 10*ell to the boundary (margin {margin})")]
    SupportNearBoundary { support: f64, margin: f64 },
    #[error("ell = {ell} under-resolves the grid: need ell >= 4*dx = {min}")]
    KernelUnderResolved { ell: f64, min: f64 },
    #[error("ell must lie in (0, 1], got {0}")]
    EllOutOfRange(f64),
    #[error("cfl must lie in (0, 1), got {0}")]
    CflOutOfRange(f64),
    #[error("t_end must be positive, got {0}")]
    NonPositiveHorizon(f64),
    #[error("snapshot times must be finite, strictly increasing, and positive")]
    BadSnapshots,
}

/// Failure while a single simulation is advancing.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("time step collapsed below 1e-12 at t = {t}")]
    StepCollapse { t: f64 },
    #[error("non-finite {what} encountered at t = {t}")]
    NonFinite { what: &'static str, t: f64 },
    #[error("wave speeds degenerate (max |f'(u)| below floor) with nonzero data at t = {t}")]
    DegenerateSpeeds { t: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Failure in the sweep harness.
#[derive(Debug, Error)]
pub enum StudyError {
    #[error("log-log fit needs at least 3 points with positive values, got {0}")]
    TooFewPoints(usize),
    #[error("ell list must be strictly decreasing and lie in (0, 1]")]
    BadEllList,
    #[error("p list must be non-empty with every p >= 1")]
    BadPList,
    #[error("member run at ell = {ell} failed: {source}")]
    MemberRun {
        ell: f64,
        #[source]
        source: RunError,
    },
    #[error("empty study result")]
    EmptyResult,
    #[error("failed to write report: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}
