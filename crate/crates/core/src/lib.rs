//! Numerical laboratory for a nonlocal regularization of scalar conservation laws.
//!
//! The lab integrates the regularized equation
//!
//! ```text
//! u_t + f(u)_x + ell^2 P_x = eps u_xx,      P - ell^2 P_xx = (1/2) f''(u) (u_x)^2,
//! ```
//!
//! with a uniformly convex flux `f`, alongside the entropy solution of the
//! underlying conservation law `u_t + f(u)_x = 0`. It measures the functionals
//! that control both solutions (H1 energy, total variation, one-sided slopes,
//! the mass of `ell^2 P`, the anti-derivative of the fluctuation), evaluates the
//! closed-form bounds those functionals must satisfy, and fits the decay of the
//! discrepancy between the two solutions as the regularization scale `ell`
//! shrinks.

pub mod csvio;
pub mod diagnostics;
pub mod entropy;
pub mod error;
pub mod flux;
pub mod grid;
pub mod helmholtz;
pub mod regularized;
pub mod study;
pub mod sums;
pub mod trajectory;

pub use diagnostics::{DiagnosticsRecord, FluctuationRecord};
pub use entropy::{EntropyRunConfig, NumericalFlux};
pub use error::{ModelError, RunError, StudyError};
pub use flux::FluxModel;
pub use grid::{Boundary, Grid1D, InitialDatum, Profile, State};
pub use helmholtz::{HelmholtzMethod, HelmholtzSolver};
pub use regularized::{RegularizedRunConfig, ViscosityPolicy};
pub use study::{GridPolicy, StudyConfig, StudyResult};
pub use trajectory::Trajectory;
