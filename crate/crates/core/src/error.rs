use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index:?} out of range for {extent} cells per axis")]
    IndexOutOfRange { index: Vec<usize>, extent: usize },

    #[error("partition depth k = {k} does not divide the grid resolution m = {m}")]
    Alignment { m: usize, k: usize },

    #[error("resolution m = {m} too coarse: finite differences need m >= 2")]
    Resolution { m: usize },

    #[error("function evaluated to a non-finite value at {point:?}")]
    NonFinite { point: Vec<f64> },

    #[error(
        "no divisor of m = {m} lies in [2, {k_star}]; \
         sample on a finer grid with a highly composite m (e.g. 120 in 2-D, 24 in 3-D)"
    )]
    SearchInfeasible { m: usize, k_star: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
