use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    /// Caller handed in something the operation is not defined for.
    #[error("usage error: {0}")]
    Usage(String),

    /// A ball enumeration or support computation ran past its budget.
    #[error("resource limit: {reason} (largest completed radius {largest_radius})")]
    Resource {
        reason: String,
        largest_radius: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    /// An estimator produced lower > upper. Always a bug.
    #[error("internal consistency violation: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::Usage(msg.into()))
}
