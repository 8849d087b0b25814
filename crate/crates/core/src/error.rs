use thiserror::Error;

/// Errors surfaced by the numeric core.
///
/// Arithmetic inside differentiated code cannot return `Result` from every
/// operator, so guarded primitives (`recip`, `ln`, `sqrt`) poison the value
/// with NaN and the boundary functions (`eval_partials`, gradient entry
/// points, rollouts) translate any non-finite component into
/// [`Error::NonFinite`].
#[derive(Debug, Error)]
pub enum Error {
    /// A value, partial derivative, or gradient component is NaN or infinite.
    /// Produced by overflow or by a domain guard (division or logarithm at a
    /// point within `1e-12` of zero, square root of a negative number).
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// A slice argument has the wrong length for the model it is used with.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A named argument is outside its documented domain.
    #[error("invalid argument {name}: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// Unknown environment name passed to the catalog constructor.
    #[error("unknown environment {0:?}")]
    UnknownEnv(String),

    /// Distribution propagation failed at a specific depth.
    #[error("propagation failed at step {step}: {source}")]
    Propagation {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    /// Reading or parsing a map file failed.
    #[error("map {path}: {reason}")]
    Map { path: String, reason: String },

    /// Reading, parsing, or validating an experiment config failed. The
    /// reason keeps the deserializer's line and column information.
    #[error("config {path}: {reason}")]
    Config { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    pub fn at_step(self, step: usize) -> Self {
        Error::Propagation {
            step,
            source: Box::new(self),
        }
    }
}
