use thiserror::Error;

/// Errors surfaced by the harness, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Output(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Output(_) | CliError::Internal(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Data(_) => "data",
            CliError::Numerical(_) => "numerical",
            CliError::Output(_) => "output",
            CliError::Internal(_) => "internal",
        }
    }

    /// `error kind=<kind> code=<code> message="<escaped>"` on one line.
    pub fn machine_line(&self) -> String {
        let message = self.to_string().replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n");
        format!("error kind={} code={} message=\"{message}\"", self.kind(), self.exit_code())
    }

    pub(crate) fn output(context: &str, err: impl std::fmt::Display) -> Self {
        CliError::Output(format!("{context}: {err}"))
    }
}

impl From<cil_core::Error> for CliError {
    fn from(err: cil_core::Error) -> Self {
        use cil_core::Error as E;
        match err {
            E::Input(_) => CliError::Config(err.to_string()),
            E::Format { .. } | E::FormatLine { .. } | E::Io(_) => CliError::Data(err.to_string()),
            E::Numerical(_) => CliError::Numerical(err.to_string()),
            E::State(_) => CliError::Internal(err.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
