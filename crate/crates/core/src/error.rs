use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{field}` out of range: {reason}")]
    OutOfRange { field: &'static str, reason: &'static str },
    #[error("inconsistent parameters: {0}")]
    Inconsistent(&'static str),
    #[error("real-time step ds={ds} is too coarse for gamma={gamma} (need ds <= 0.1/gamma)")]
    StepTooCoarse { ds: f64, gamma: f64 },
    #[error("path is empty")]
    EmptyPath,
    #[error("no effective time elapses along the path")]
    DegenerateTime,
    #[error("Skorokhod start must be non-negative, got {0}")]
    NegativeStart(f64),
    #[error("start {0} lies outside the strip [0, 1]")]
    StartOutOfStrip(f64),
    #[error("driving path must start at 0, got {0}")]
    NonZeroDrivingStart(f64),
    #[error("mollifier width must be positive, got {0}")]
    EpsNonPositive(f64),
    #[error("query s={query} exceeds the final physical time {last} of the path")]
    HorizonExceeded { query: f64, last: f64 },
    #[error("effective-time decomposition needs the driving path and local times")]
    MissingLocalTimes,
    #[error("no samples")]
    EmptySamples,
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}
