use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("parameter `{name}` = {value} outside admissible range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("grid index {index} outside grid of {points} points")]
    IndexOutOfGrid { index: usize, points: usize },

    #[error("field length {got} does not match grid of {expected} points")]
    LengthMismatch { expected: usize, got: usize },

    #[error("negative density {value:e} at index {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error(
        "time step {dt:e} violates stability bound; largest admissible step is {admissible:e}"
    )]
    StepTooLarge { dt: f64, admissible: f64 },

    #[error("adaptive time step collapsed to {dt:e} (floor {floor:e})")]
    StepUnderflow { dt: f64, floor: f64 },

    #[error("fit rejected: {0}")]
    FitRejected(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("particles {i} and {j} coincide (distance {distance:e})")]
    Coincident { i: usize, j: usize, distance: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    range: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, range })
    }
}
