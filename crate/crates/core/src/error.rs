//! One error type for the whole crate. Variants carry the quantities a
//! caller needs to decide whether to shrink a step, fix the data, or abort.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot project the zero vector onto a sphere")]
    DegeneratePoint,

    #[error("point lies off the target by {dist:.3e} (tolerance {tol:.3e})")]
    PointOffManifold { dist: f64, tol: f64 },

    #[error("chart coordinate {y:?} lies outside the chart domain")]
    ChartDomainExceeded { y: Vec<f64> },

    #[error("metric is not invertible at chart coordinate {y:?}")]
    SingularMetric { y: Vec<f64> },

    #[error("vector is not tangent at the base point (defect {defect:.3e}, tolerance {tol:.3e})")]
    NotTangent { defect: f64, tol: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("CFL ratio dt/dx = {ratio:.4} exceeds the allowed {max:.4}")]
    CflViolation { ratio: f64, max: f64 },

    #[error("blow-up guard tripped at t = {t:.6}: max |du/dt| = {max_ut:.3e}")]
    BlowupDetected { t: f64, max_ut: f64 },

    #[error("fixed-point iteration did not converge after {iters} sweeps (last delta {delta:.3e})")]
    NoConvergence { iters: usize, delta: f64 },

    #[error("singular linear system in the transport step at node (level {level}, column {column})")]
    LinearSolveFailure { level: usize, column: usize },

    #[error("initial data does not cover the required base ({needed} samples needed, {got} provided)")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("restart window exhausted after {restarts} restarts (remaining half-width {width:.3e})")]
    WindowExhausted { restarts: usize, width: f64 },

    #[error("sample point (t = {t}, x = {x}) lies outside the stored trajectory")]
    ResampleOutOfRange { t: f64, x: f64 },

    #[error("no explicit primitive is available for this two-form")]
    NoPrimitiveAvailable,

    #[error("config validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("could not parse config: {0}")]
    Parse(String),

    #[error("malformed run directory: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
