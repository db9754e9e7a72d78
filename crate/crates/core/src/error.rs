use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A validity inequality of the expansion does not hold; the message names it.
    #[error("validity condition violated: {0}")]
    Validity(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("rejection acceptance rate {rate:.3e} is below the floor {floor:.3e}")]
    AcceptanceFloor { rate: f64, floor: f64 },

    #[error("rank-deficient design matrix (condition number {cond:.3e})")]
    RankDeficient { cond: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("cache conflict for key {0}: stored config differs")]
    CacheConflict(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
