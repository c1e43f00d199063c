use thiserror::Error;

/// Errors raised by the numerical and physical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("series length {len} does not match grid count {count}")]
    LengthMismatch { len: usize, count: usize },

    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },

    #[error("omega = {omega} rad/s lies outside the open band ({omega_min}, {omega_max})")]
    OutsideBand {
        omega: f64,
        omega_min: f64,
        omega_max: f64,
    },

    #[error("omega = {omega} rad/s is within one grid spacing of a band edge")]
    EndpointProximity { omega: f64 },

    #[error("invalid index model: {0}")]
    InvalidIndexModel(String),

    #[error("invalid system configuration: {0}")]
    InvalidConfig(String),

    #[error("transmission vanishes at omega = {omega} rad/s (|H| = {magnitude:e}); phase is undefined")]
    ZeroTransmission { omega: f64, magnitude: f64 },

    #[error("band too narrow: no grid point can be transformed")]
    BandTooNarrow,

    #[error("insufficient data: {available} usable points, need at least {required}")]
    InsufficientData { available: usize, required: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("{leakage:.3e} of the pulse energy lies outside the model band (limit {limit:.1e})")]
    BandViolation { leakage: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
