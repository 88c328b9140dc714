use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("link has no spans")]
    EmptyLink,

    #[error("span index {index} out of range for {count} spans")]
    SpanOutOfRange { index: usize, count: usize },

    #[error("channel index {index} out of range for {count} channels")]
    ChannelOutOfRange { index: usize, count: usize },

    #[error("utilization target of {target} slots cannot hold {signals} signal channels")]
    UtilizationBelowSignals { target: usize, signals: usize },

    #[error("frequency {f_thz} THz is not inside an occupied channel")]
    Unoccupied { f_thz: f64 },

    #[error("at least two occupied channels are required, found {found}")]
    TooFewChannels { found: usize },

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("simulation bandwidth too small: {0}")]
    Aliasing(String),

    #[error("no transmitted reference for channel {0}")]
    UnknownReference(usize),

    #[error("malformed scenario: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
