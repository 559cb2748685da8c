use thiserror::Error;

/// Errors reported by code construction, decoding and the simulation harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("block length {0} is not a power of two >= 4")]
    InvalidBlockLength(usize),
    #[error("k + r = {ktot} exceeds block length {n}")]
    TooManyInfoBits { ktot: usize, n: usize },
    #[error("reliability order is not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("CRC polynomial must have degree {r} with leading and constant terms set")]
    InvalidCrcPolynomial { r: usize },
    #[error("code rate {0} outside (0, 1]")]
    InvalidRate(f64),
    #[error("flip index {0} is not an information position")]
    FrozenFlip(usize),
    #[error("restart location {0} is invalid here")]
    InvalidRestart(usize),
    #[error("restart requires the initial-trial bit estimates")]
    MissingRestartEstimates,
    #[error("candidate pool operation on {0}")]
    PoolMisuse(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
