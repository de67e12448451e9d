use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("window mismatch: {0}")]
    WindowMismatch(String),

    #[error("window is not closed under the reflection about x1 = {0}")]
    NotReflectionClosed(f64),

    #[error("kernel does not satisfy the strict reflection monotonicity condition for a = {0}")]
    KernelCondition(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("no convergence after {iterations} iterations: {message}")]
    NoConvergence {
        message: String,
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("no sign-changing minimizer found")]
    NoSignChangingMinimizer,

    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
