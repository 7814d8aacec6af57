use thiserror::Error;

use crate::train::TrainTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value lies outside the domain a membership or reduction
    /// operation is defined on (non-positive sigma, alpha below the
    /// floor, violated ordering constraints, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Dimension disagreement between inputs that must match.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Invalid model/train configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Dataset ingestion or preprocessing failure. Row-level parse
    /// problems carry the offending 1-based data row in the message.
    #[error("data error: {0}")]
    Data(String),

    /// Training produced a non-finite loss. `group` names the raw
    /// parameter group the overflow was traced to.
    #[error("training diverged: non-finite loss traced to parameter group `{group}`")]
    Divergence {
        group: String,
        /// Trace recorded up to the failing epoch, when available.
        trace: Option<Box<TrainTrace>>,
    },

    /// Model file decode/validation failure.
    #[error("model file error: {0}")]
    Model(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_parameter(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
