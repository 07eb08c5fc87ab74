use thiserror::Error;

/// Errors raised across panel construction, testing, estimation and pricing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in series `{series}` at {date}: {message}")]
    Domain {
        series: String,
        date: String,
        message: String,
    },

    #[error("size error: {0}")]
    Size(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("column `{column}` has zero variance")]
    ZeroVariance { column: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("Kalman filter failed at t={t}: {message}")]
    Filter { t: usize, message: String },

    #[error("estimation failed at iteration {iteration}: {message}")]
    Estimation { iteration: usize, message: String },

    #[error("stability error: {0}")]
    Stability(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by numerical failure rather than bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Filter { .. }
                | Error::Estimation { .. }
                | Error::Stability(_)
                | Error::SingularDesign(_)
                | Error::Degenerate(_)
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Csv(_) | Error::Json(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
