use thiserror::Error;

/// Library error type. The variants map onto the failure classes the
/// operations distinguish: bad call parameters, grids that cannot hold the
/// requested state, violated caller contracts, exceeded accuracy budgets,
/// and time-stepping failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("accuracy error: {0}")]
    Accuracy(String),
    #[error("stability error: {0}")]
    Stability(String),
    #[error("aliasing error: {0}")]
    Aliasing(String),
}

pub type Result<T> = std::result::Result<T, Error>;
