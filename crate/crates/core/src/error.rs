use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point is not on the unit sphere: |x| = {norm}")]
    NotOnSphere { norm: f64 },

    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sample rows are rank deficient (singular value ratio {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("degenerate zero set: {0}")]
    Degenerate(String),

    #[error("unexpected fiber: f(x) = f(y) with geodesic distance {distance} between non-antipodal points")]
    UnexpectedFiber { distance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
