use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Every agent put zero weight on the realized state, so its price is zero.
    #[error("degenerate market at step {step}: price of realized state {state} is zero")]
    DegenerateMarket { step: usize, state: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("agent {agent} failed at step {step}: {source}")]
    Agent {
        agent: usize,
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("seed {seed}: {source}")]
    Seed {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
