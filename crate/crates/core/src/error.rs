//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point was evaluated outside the computational box.
    #[error("point ({0}, {1}, {2}) lies outside the domain box")]
    OutsideDomain(f64, f64, f64),

    /// Bad scenario configuration (unknown name, out-of-range value, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Non-finite or otherwise unusable input data.
    #[error("input error: {0}")]
    Input(String),

    /// Requested time step exceeds the advection stability limit.
    #[error("time step {dt:.6e} exceeds CFL limit {limit:.6e} (max speed {max_speed:.6e})")]
    CflViolation { dt: f64, limit: f64, max_speed: f64 },

    /// An operation's precondition on its inputs does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The in-slice gradient fell below `eps_grad` at a surface point, so
    /// normals and front speeds are not well defined there.
    #[error(
        "degenerate slice gradient {value:.3e} < eps_grad {eps:.3e} at ({x1:.4}, {x2:.4}, x3 = {x3:.4})"
    )]
    DegenerateGradient {
        value: f64,
        eps: f64,
        x1: f64,
        x2: f64,
        x3: f64,
    },

    /// Contour assembly produced a polyline that does not close: the zero set
    /// reaches the slice boundary or the cell data is degenerate.
    #[error("open contour polyline at x3 = {x3:.4}: zero set reaches the slice boundary or is degenerate")]
    OpenContour { x3: f64 },

    /// The speed-weighted slice formula divides by the full normal speed; it
    /// cannot be used where the surface is (nearly) stationary.
    #[error(
        "normal speed |{sigma:.3e}| at ({x1:.4}, {x2:.4}) is below the floor {floor:.3e}; \
         use the unweighted slice formula for near-stationary surfaces"
    )]
    NearStationarySurface {
        sigma: f64,
        floor: f64,
        x1: f64,
        x2: f64,
    },

    /// No admissible activation time exists for the requested window margin.
    #[error(
        "window hypothesis failure: cumulative speed tail {tail:.6e} never leaves an axial gap of \
         {required:.6e} before the horizon"
    )]
    HypothesisFailure { tail: f64, required: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
