use std::fmt;

/// CLI failure, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, input files or parameters: exit 2.
    Config(String),
    /// Library failure; numerical and spectral ones exit 3, the rest 2.
    Core(trustweave::Error),
    /// Writing artifacts failed: exit 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<trustweave::Error> for CliError {
    fn from(e: trustweave::Error) -> Self {
        CliError::Core(e)
    }
}
