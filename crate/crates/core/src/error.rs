use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("did not converge: {0}")]
    NotConverged(String),

    #[error("target rate {target} Hz is outside the achievable range [{low}, {high}] Hz")]
    TargetOutOfRange { target: f64, low: f64, high: f64 },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("layer {layer}: {source}")]
    Layer { layer: usize, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        if let Error::Layer { source, .. } = self {
            return source.is_config_error();
        }
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Dimension(_)
                | Error::Unsupported(_)
                | Error::TargetOutOfRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
