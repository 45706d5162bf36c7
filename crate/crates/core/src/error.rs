use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{quantity} = {value} outside valid range [{min}, {max}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("singular evaluation: {0}")]
    Singularity(String),

    #[error("no guided mode above the background index {background:.6}")]
    NoGuidedMode { background: f64 },

    #[error("eigensolver failed after {iterations} iterations (residual {residual:.3e}): {reason}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("critical coupling not found in range; closest |kappa_c - kappa_i| = {min_mismatch:.4e} rad/s at CL = {at_cl_um:.3} um")]
    CriticalNotFound { min_mismatch: f64, at_cl_um: f64 },

    #[error("fit failed after {iterations} iterations (cost {cost:.4e}): {reason}")]
    FitFailed {
        iterations: usize,
        cost: f64,
        reason: String,
    },

    #[error("insufficient signal: dip depth {depth:.4} below 3 sigma noise ({sigma:.4})")]
    InsufficientSignal { depth: f64, sigma: f64 },

    #[error("no bound trap minimum: {0}")]
    Untrapped(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
