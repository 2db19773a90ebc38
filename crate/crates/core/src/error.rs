use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: motion leaving the geometry range, bad channel
    /// parameters, missing knowledge base, refused oracle mode, ...
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke an operation's precondition (shape mismatch, bad
    /// marginals, non-positive regularization, empty cloud, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("projection error: point has non-positive depth {depth} in camera {view_id}")]
    BehindCamera { view_id: usize, depth: f64 },

    #[error("singular geometry for keypoint {index}: rays are parallel")]
    SingularGeometry { index: usize },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
