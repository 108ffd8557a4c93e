use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// One message per offending key, all reported together.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("time step {dt:e} fell below the minimum {dt_min:e} at t = {t}")]
    TimeStepUnderflow { t: f64, dt: f64, dt_min: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
