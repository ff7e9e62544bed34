use lpconv_core::LabError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad config, bad parameter or an experiment the inputs do not support.
    #[error("{location}: {message}")]
    Parse { location: String, message: String },

    #[error("{location}: resource limit: {reason} (largest completed radius {largest_radius}, {completed_blocks} blocks completed)")]
    Resource {
        location: String,
        reason: String,
        largest_radius: usize,
        completed_blocks: usize,
    },

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Parse { location: location.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Resource { .. } => 3,
            CliError::Io(_) => 1,
        }
    }

    /// Map a library error raised while preparing or running a block.
    /// Consistency errors are not routed here; they fail the block instead.
    pub fn from_lab(location: &str, e: LabError, completed_blocks: usize) -> Self {
        match e {
            LabError::Resource { reason, largest_radius } => {
                CliError::Resource { location: location.to_string(), reason, largest_radius, completed_blocks }
            }
            other => CliError::parse(location, other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
