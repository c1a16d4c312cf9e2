use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid switching spec: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid regulator: {0}")]
    InvalidRegulator(String),
    #[error("numerical failure: {what} (error estimate {estimate:e})")]
    Numerical { what: &'static str, estimate: f64 },
    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),
    #[error("routes disagree for {what}: time domain {time_domain:e}, spectral {spectral:e}")]
    CrossValidation {
        what: &'static str,
        time_domain: f64,
        spectral: f64,
    },
    #[error("appendix consistency failed: direct {direct}, by parts {by_parts}, remnant {remnant}")]
    AppendixConsistency {
        direct: String,
        by_parts: String,
        remnant: String,
    },
    #[error("probability {0} outside [0, 1]; perturbative expansion invalid")]
    PerturbativeValidity(f64),
    #[error("degenerate probability {0:e}")]
    DegenerateProbability(f64),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
