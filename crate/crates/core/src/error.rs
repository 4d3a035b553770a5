use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular evaluation: {0}")]
    SingularEvaluation(String),
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),
    #[error("integrand returned a non-finite value at z = {re}{im:+}i")]
    NonFiniteSample { re: f64, im: f64 },
    #[error("unsupported distribution: {0}")]
    UnsupportedDistribution(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence(_) | Error::NonFiniteSample { .. } | Error::SingularEvaluation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
