use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    Dimension {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// The level-set gradient vanished where a normal was requested.
    #[error("degenerate normal at {point:?}: |grad g| = {grad_norm:e}")]
    DegenerateNormal { point: Vec<f64>, grad_norm: f64 },

    #[error("boundary region appears empty: {accepted} of {requested} points after {attempts} attempts")]
    EmptyRegion {
        requested: usize,
        accepted: usize,
        attempts: usize,
    },

    #[error("invalid drift: non-finite value at {point:?}")]
    InvalidDrift { point: Vec<f64> },

    #[error("invalid field in {channel} channel: non-finite output")]
    InvalidField { channel: &'static str },

    #[error("policy error: {0}")]
    Policy(String),

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("ordering error: {0}")]
    Ordering(String),

    #[error("precondition error: {0}")]
    Precondition(String),

    #[error("divergence at t = {t}: last valid state {last_valid:?}")]
    Divergence { t: f64, last_valid: Vec<f64> },

    #[error("control bound violated at integrator boundary: |Bu| = {norm} > {bound}")]
    BoundViolation { norm: f64, bound: f64 },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
