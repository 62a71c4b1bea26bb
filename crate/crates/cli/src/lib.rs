//! Library surface of the pipeline driver: the run configuration and stage
//! implementations, reused by the `annostat` binary and the fuzz harness.

pub mod config;
pub mod stages;

#[derive(Debug)]
pub enum CliError {
    /// Exit 1: bad invocation, bad config, or missing stage outputs.
    Usage(String),
    /// Exit 2: input data failed validation.
    Data(String),
    /// Exit 3: numerical failure during fitting.
    Numerical(String),
}

impl From<annostat::Error> for CliError {
    fn from(e: annostat::Error) -> Self {
        match &e {
            annostat::Error::Parse { .. } | annostat::Error::Validation(_) => {
                CliError::Data(e.to_string())
            }
            annostat::Error::Config(_) | annostat::Error::Io(_) => CliError::Usage(e.to_string()),
            annostat::Error::Numerical(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}
