use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no convergence after {iterations} iterations (last residual {last_residual:.3e})")]
    Divergence {
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },
    #[error("solver blow-up at t = {time}: sup norm {sup_norm:.3e} exceeds {limit:.3e}")]
    BlowUp { time: f64, sup_norm: f64, limit: f64 },
    #[error("efficiency error: {0}")]
    Efficiency(String),
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("format error: {0}")]
    Format(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
