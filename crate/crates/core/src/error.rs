use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inverted element at particle {particle}: det(F) = {det:e}")]
    InvertedElement { particle: usize, det: f64 },

    #[error("coincident particles {i} and {j} in the reference configuration")]
    DegenerateGeometry { i: usize, j: usize },

    #[error("correction matrix of particle {particle} is singular or ill-conditioned (condition {condition:e})")]
    DegenerateNeighborhood { particle: usize, condition: f64 },

    #[error("solver failure at step {step} (t = {time:e} s): {source}")]
    SolverFailure {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite state at particle {particle}")]
    NonFinite { particle: usize },

    #[error("config error ({context}): {message}")]
    Config { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            context: context.into(),
            message: message.into(),
        }
    }
}
