use thiserror::Error;

use crate::embedding::Strategy;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("strategy {0:?} is box-bounded and has no polytope description")]
    UnsupportedStrategy(Strategy),

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("degenerate projection matrix: {0}")]
    Degenerate(String),

    #[error(
        "rejection sampling accepted {accepted} of {proposed} proposals; \
         the feasible polytope is too thin, try a smaller embedding dimension"
    )]
    SamplingFailure { accepted: usize, proposed: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("model fit failed: {0}")]
    Fit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown problem id `{0}`")]
    UnknownProblem(String),

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::Iteration {
            iteration,
            source: Box::new(self),
        }
    }
}
