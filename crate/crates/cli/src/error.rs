use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] edm_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    /// 2 config, 3 resource budget, 4 non-convergence, 5 anything else.
    pub fn exit_code(&self) -> i32 {
        use edm_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Resource { .. }) => 3,
            CliError::Core(E::NoConvergence { .. } | E::Cutoff(_)) => 4,
            CliError::Core(E::InvalidParameter(_)) => 2,
            _ => 5,
        }
    }
}
