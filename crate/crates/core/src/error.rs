use thiserror::Error;

/// Errors raised by curve construction, the solvers and scenario loading.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time {t} is outside the curve domain [0, {horizon}]")]
    OutOfDomain { t: f64, horizon: f64 },

    #[error("empty interval: start {start} is not before end {end}")]
    EmptyInterval { start: f64, end: f64 },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("curve is not convex (second difference {second_difference:e} at t = {at})")]
    NonConvex { at: f64, second_difference: f64 },

    #[error("curve is decreasing at t = {at} (drop {drop:e})")]
    Decreasing { at: f64, drop: f64 },

    #[error("invalid rate law: {0}")]
    InvalidRate(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("deadline must be positive, got {0}")]
    NonPositiveDeadline(f64),

    #[error("requested {requested} bits but at most {achievable} are achievable")]
    ExceedsAchievable { requested: f64, achievable: f64 },

    #[error("target of {target} bits is unreachable by t_max (at most {achievable} bits)")]
    Unreachable { target: f64, achievable: f64 },

    #[error("rate law `{0}` is not sublinear (r(p)/p does not vanish); completion time is not well defined")]
    NotSublinear(String),

    #[error("causal view queried at t = {requested} while the clock is at {now}")]
    LookAhead { requested: f64, now: f64 },

    #[error("oracle instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("scenario file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
