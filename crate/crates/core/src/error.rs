use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid decision in slot {slot}: {reason}")]
    InvalidDecision { slot: usize, reason: String },

    #[error("invalid cost: {0}")]
    InvalidCost(String),

    #[error("pattern is not one-sided: {0}")]
    NotOneSided(String),

    #[error("instance too large for exhaustive matching: {n1} x {n2} packets (limit {limit} per side)")]
    InstanceTooLarge { n1: usize, n2: usize, limit: usize },

    #[error("slot {slot} has {count} arrivals at queue {queue}; spread arrivals first")]
    BurstyArrivals { slot: usize, queue: u8, count: u32 },

    #[error("empty threshold search range")]
    EmptySearchRange,

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
