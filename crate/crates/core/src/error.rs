use thiserror::Error;

/// Errors raised anywhere in the inference pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed model, dataset or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A model produced an invalid quantity (negative propensity, bad transition).
    #[error("model error: {0}")]
    Model(String),

    /// The truncated state space would exceed its configured size limit.
    #[error("capacity exceeded: {states} states needed, limit {limit} (theta = {theta:?})")]
    Capacity {
        states: usize,
        limit: usize,
        theta: Vec<f64>,
    },

    /// Time integration failed to converge.
    #[error("integrator error at t = {time}: {message}")]
    Integrator { time: f64, message: String },

    /// The sampler cannot proceed (degenerate population, all weights zero).
    #[error("sampler failure: {0}")]
    Sampler(String),

    /// An API was called outside its contract.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn model(msg: impl Into<String>) -> Self {
        Error::Model(msg.into())
    }

    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity { .. })
    }
}
