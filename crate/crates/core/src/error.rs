use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed WAV file: {0}")]
    WavFormat(String),

    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid scene: {0}")]
    Scene(String),

    /// A source and a receiver (sensor, probe or grid candidate) are closer
    /// than the near-field clamp.
    #[error("near-field violation: {what} is {distance:.4} m away (minimum {min} m)")]
    NearField {
        what: String,
        distance: f64,
        min: f64,
    },

    #[error("SNR calibration failed: {0}")]
    Calibration(String),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fGn synthesis failed: {0}")]
    Synthesis(String),

    #[error("invalid noise statistics: {0}")]
    InvalidStats(String),

    #[error("search failed: {0}")]
    SearchFailure(String),

    #[error("singular Fisher information matrix: {0}")]
    SingularFisher(String),

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Prefix the message with the ids of the sensor/source pair that failed.
    pub fn in_context(self, context: &str) -> Error {
        match self {
            Error::NearField { what, distance, min } => Error::NearField {
                what: format!("{context}: {what}"),
                distance,
                min,
            },
            Error::Parameter(m) => Error::Parameter(format!("{context}: {m}")),
            Error::Scene(m) => Error::Scene(format!("{context}: {m}")),
            Error::Calibration(m) => Error::Calibration(format!("{context}: {m}")),
            other => other,
        }
    }
}
