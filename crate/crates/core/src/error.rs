use thiserror::Error;

/// Errors produced by the numerical routines and the command-line front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: entry ({row}, {col}) deviates by {deviation:e}")]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("matrix is not positive semi-definite: eigenvalue {eigenvalue:e}")]
    NotPsd { eigenvalue: f64 },

    #[error("{algorithm} did not converge after {iterations} iterations")]
    NoConvergence {
        algorithm: &'static str,
        iterations: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no eigenmode is stronger than the eavesdropper bound {epsilon}")]
    NoActiveMode { epsilon: f64 },

    #[error(
        "legitimate channel rank {legit_rank} exceeds eavesdropper rank bound {rank_bound}: \
         no saddle point is guaranteed in this regime, so no capacity value is reported"
    )]
    RankExceeded {
        legit_rank: usize,
        rank_bound: usize,
    },

    #[error("{what} is too large for exhaustive search ({size} > {limit})")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("row {row} of the stochastic matrix is invalid: {reason}")]
    NotStochastic { row: usize, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Io(_) => 2,
            Error::NoConvergence { .. } => 4,
            _ => 3,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::NonFinite { .. } => "non_finite",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::NotPsd { .. } => "not_psd",
            Error::NoConvergence { .. } => "no_convergence",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NoActiveMode { .. } => "no_active_mode",
            Error::RankExceeded { .. } => "rank_exceeded",
            Error::TooLarge { .. } => "too_large",
            Error::NotStochastic { .. } => "not_stochastic",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}
