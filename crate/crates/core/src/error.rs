use thiserror::Error;

/// Errors raised by the library. Every variant renders as a single line so the
/// CLI can forward it as a machine-parsable reason.
#[derive(Debug, Error)]
pub enum Error {
    #[error("resource: {what} needs {needed} but budget `{budget}` allows {allowed}")]
    Resource {
        what: String,
        budget: &'static str,
        needed: u64,
        allowed: u64,
    },
    #[error("size: {0}")]
    Size(String),
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("config: {0}")]
    Config(String),
    #[error("format: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
