use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inputs outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("fit did not converge after {iterations} iterations (residual rms {residual_rms:.3e})")]
    FitConvergence { iterations: usize, residual_rms: f64 },

    #[error("detection error: {0}")]
    Detection(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    /// The data can be processed but the result would be biased.
    #[error("quality error: {0}")]
    Quality(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unit error: {0}")]
    Unit(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Stable machine-readable class name.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Numerical(_) => "numerical",
            Error::FitConvergence { .. } => "fit",
            Error::Detection(_) => "detection",
            Error::Calibration(_) => "calibration",
            Error::Quality(_) => "quality",
            Error::InsufficientData(_) => "insufficient-data",
            Error::Unit(_) => "unit",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
