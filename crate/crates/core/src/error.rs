use thiserror::Error;

/// Errors raised by gammalab operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("atom index {index} out of range for configuration with {len} atoms")]
    AtomIndex { index: usize, len: usize },

    #[error("region escapes the sampled window: {0}")]
    OutsideWindow(String),

    #[error("mass floor {eps} exceeds the lower mass support {lower} of the test functions")]
    MassFloorTooLarge { eps: f64, lower: f64 },

    #[error("quadrature did not converge: degree {low} gives {low_value}, degree {high} gives {high_value}")]
    Quadrature {
        low: usize,
        high: usize,
        low_value: f64,
        high_value: f64,
    },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("operator contract violated: {0}")]
    Contract(String),

    #[error("check skipped: {0}")]
    Skipped(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
