use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate retraction: norm {0:.3e} below threshold")]
    DegenerateRetraction(f64),

    #[error("point is off the manifold (constraint violation {0:.3e})")]
    OffManifold(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("singular channel Gram matrix (condition number {0:.3e})")]
    Singular(f64),
}

pub(crate) fn dim_check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Dimension(msg()))
    }
}
