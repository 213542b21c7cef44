use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the validity range of a model (altitude, speed, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Cross wind equals or exceeds airspeed; no crab angle can hold the track.
    #[error("infeasible crab: |W_c| = {wc:.3} m/s >= V_T = {vt:.3} m/s")]
    InfeasibleCrab { wc: f64, vt: f64 },

    /// The admissible flight-path-angle set is empty at the current state.
    #[error("infeasible control set: {0}")]
    InfeasibleControl(String),

    /// Aircraft or scenario data violates a load-time invariant.
    #[error("model validation failed: {0}")]
    ModelValidation(String),

    /// An iterative numerical procedure failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Trajectory synthesis could not connect the required arcs.
    #[error("synthesis failure: {0}")]
    Synthesis(String),

    /// An integration event was not found within the allotted horizon.
    #[error("no junction found: {0}")]
    NoJunction(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
