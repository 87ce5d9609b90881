use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations.
    Usage(String),
    /// Unreadable or malformed dataset.
    Data(String),
    /// Output location cannot be written.
    Output(String),
    /// Anything else (a numerical failure on otherwise valid input).
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Output(_) => 4,
            CliError::Failed(_) => 1,
        }
    }

    pub fn output(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Output(format!("cannot write {}: {e}", path.display()))
    }

    pub fn data(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Output(m) | CliError::Failed(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<matfdp_core::Error> for CliError {
    fn from(e: matfdp_core::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<matfdp_simlab::SimError> for CliError {
    fn from(e: matfdp_simlab::SimError) -> Self {
        match e {
            matfdp_simlab::SimError::InvalidSpec(m) => CliError::Usage(m),
            matfdp_simlab::SimError::Core(e) => e.into(),
        }
    }
}
