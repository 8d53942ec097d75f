use thiserror::Error;

/// Errors raised by the geometric and measure-theoretic layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid plane point ({x}, {y}): height must be positive and finite")]
    InvalidPoint { x: f64, y: f64 },

    #[error("degenerate projective pair ({a}, {b})")]
    DegenerateBoundary { a: f64, b: f64 },

    #[error("matrix determinant {0} is not positive")]
    BadDeterminant(f64),

    #[error("boundary points coincide")]
    CoincidentEndpoints,

    #[error("vectors do not share a {0} horosphere")]
    NotOnHorosphere(&'static str),

    #[error("cross ratio undefined: a paired argument coincides")]
    DegenerateCrossRatio,

    #[error("invalid disk configuration: {0}")]
    InvalidDisks(String),

    #[error("ping-pong violated: {0}")]
    PingPong(String),

    #[error("operation requires a nonempty word")]
    EmptyWord,

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("pressure estimators disagree: {a} vs {b} (shell trend {trend})")]
    EstimatorDisagreement { a: f64, b: f64, trend: f64 },

    #[error("all weights underflow")]
    Underflow,

    #[error("zero mass: {0}")]
    ZeroMass(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("averaging sequence rejected: {0}")]
    StarViolated(String),
}

pub type Result<T> = std::result::Result<T, Error>;
