use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("state space of {size} profiles exceeds the cap of {cap}")]
    Capacity { size: u128, cap: usize },

    /// Two Hamming-1 neighbors share the same potential; the analysis
    /// requires strictly distinct potentials along every feasible move.
    #[error("equal-potential edge between profiles {from:?} and {to:?} (potential {potential})")]
    EqualPotentialEdge {
        from: Vec<usize>,
        to: Vec<usize>,
        potential: f64,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("configuration error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
