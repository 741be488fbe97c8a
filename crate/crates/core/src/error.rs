use thiserror::Error;

/// Errors produced anywhere in the pipeline, from symbolic derivation down to CSV I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by the zero rational function")]
    DivisionByZero,

    #[error("annihilator requested for an empty or all-zero span")]
    EmptySpan,

    #[error("coefficient of term `{term}` is not reducible to finite integral form")]
    NotIntegralForm { term: String },

    #[error("operator term `{term}` is not strictly integral")]
    NotStrictlyIntegral { term: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),

    #[error("signal has {len} samples but the window needs {window}")]
    SignalTooShort { len: usize, window: usize },

    #[error("linear estimate needs a detector of degree 1 in the delay, got degree {0}")]
    NotLinear(usize),

    #[error("invalid signal spec: {0}")]
    InvalidSignal(String),

    #[error("unknown built-in suite `{0}`")]
    UnknownSuite(String),

    #[error("clean signal has zero power; cannot calibrate noise to a finite SNR")]
    ZeroPowerSignal,

    #[error("invalid noise spec: {0}")]
    InvalidNoise(String),

    #[error("detector self-check failed: {0}")]
    VerificationFailed(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
