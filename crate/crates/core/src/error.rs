use thiserror::Error;

/// Errors shared across the geometry, flow, spectra and trace modules.
#[derive(Debug, Error)]
pub enum Error {
    /// A point left the coordinate chart of the model (e.g. the excluded
    /// ball around the Kepler-Heisenberg singularity).
    #[error("chart domain error for model `{model}` at ({x}, {y}, {z}): {reason}")]
    ChartDomain {
        model: &'static str,
        x: f64,
        y: f64,
        z: f64,
        reason: &'static str,
    },

    /// Operation not defined for the model (e.g. Popp volume of a
    /// non-compact model).
    #[error("operation `{op}` is not supported for model `{model}`: {reason}")]
    Unsupported {
        op: &'static str,
        model: &'static str,
        reason: &'static str,
    },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// Adaptive step-size control drove the step below the representable
    /// minimum; reports the time of failure.
    #[error("step size underflow at t = {t}: {reason}")]
    StepUnderflow { t: f64, reason: &'static str },

    /// An implicit stage iteration failed to reach its fixed point.
    #[error("implicit solver stalled at t = {t} (residual {residual:.3e})")]
    ImplicitSolverStalled { t: f64, residual: f64 },

    /// Newton/Gauss-Newton shooting failed to converge.
    #[error("shooting for k = {k} did not converge after {iterations} iterations (last residual {residual:.3e})")]
    ShootingFailed {
        k: u32,
        iterations: usize,
        residual: f64,
    },

    #[error("singular Jacobian in shooting for k = {k} (degenerate orbit)")]
    ShootingSingular { k: u32 },

    /// Grid/flux mismatch in the magnetic mode discretization.
    #[error("discretization incompatible with mode {mode}: {reason}")]
    Discretization { mode: i64, reason: String },

    #[error("eigensolver failure: {0}")]
    Eigensolve(String),

    /// A least-squares fit was ill-conditioned or rejected.
    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
