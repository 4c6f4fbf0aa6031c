use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular matrix: {size}x{size} block has rank {rank}")]
    SingularMatrix { size: usize, rank: usize },

    #[error("unsupported spectrum: {0}")]
    UnsupportedSpectrum(String),

    #[error("infeasible injection: {0}")]
    InfeasibleInjection(String),

    #[error("row {row} of the loop matrix is not a circulation: vertex {vertex} has net flow {net}")]
    InvalidLoop { row: usize, vertex: usize, net: String },

    #[error("unknown catalog topology `{0}`")]
    UnknownTopology(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
