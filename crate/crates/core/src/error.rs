use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// Two fields (or a field and a vector) disagree on truncation or spatial size.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument was outside the domain of an operation.
    #[error("invalid input: {0}")]
    Input(String),

    /// A closed-form expression was evaluated past a singularity.
    #[error("domain error: {0}")]
    Domain(String),

    /// A weight or product left the representable floating-point range.
    #[error("overflow: {0}")]
    Overflow(String),

    /// The level-zero solution exceeded the blow-up cap.
    #[error("blow-up detected at t = {time}: sup-norm {norm:e} exceeds cap {cap:e}")]
    BlowUp { time: f64, norm: f64, cap: f64 },

    /// A coefficient was requested before all of its lower indices were solved.
    #[error("sequencing error: {0}")]
    Sequencing(String),

    /// The requested configuration is outside what the solver supports.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A problem file could not be parsed or failed validation.
    #[error("problem file: {0}")]
    Parse(String),

    /// A numerical routine produced a non-finite value or failed to factorize.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
