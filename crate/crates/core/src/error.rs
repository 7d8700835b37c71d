use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("map file not found: {0}")]
    MapNotFound(String),

    #[error("malformed map header: {0}")]
    MalformedMap(String),

    #[error("search start point is not inside an obstacle")]
    StartOutside,

    #[error("obstacle unbounded along ray within t_max = {t_max}")]
    Unbounded { t_max: f64 },

    #[error("farthest search did not converge (gap {gap})")]
    NotConverged { best: Vec<f64>, gap: f64 },

    #[error("degenerate obstacle: width {width} along {direction:?} is below eps")]
    DegenerateObstacle { direction: Vec<f64>, width: f64 },

    #[error("degenerate hull: point set does not span the space")]
    DegenerateHull,

    #[error("oracle inconsistency: coreset point {0:?} no longer queries true")]
    OracleInconsistency(Vec<f64>),

    #[error("free space exhausted")]
    FreeSpaceExhausted,

    #[error("start or goal lies inside an obstacle")]
    EndpointInObstacle,
}
