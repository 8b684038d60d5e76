use std::path::PathBuf;

use pif_core::PifError;

/// Process exit codes. Usage errors exit with 2 through clap.
pub mod code {
    pub const NOT_FOUND: i32 = 3;
    pub const VALIDATION: i32 = 4;
    pub const RUNTIME: i32 = 5;
    pub const PROTOCOL: i32 = 6;
    pub const MISMATCH: i32 = 7;
    pub const NONDETERMINISTIC: i32 = 8;
}

#[derive(Debug)]
pub enum CliError {
    NotFound(PathBuf),
    Parse { path: PathBuf, message: String },
    Validation { path: PathBuf, line: Option<usize>, message: String },
    Protocol(PifError),
    Runtime(PifError),
    Io(String),
    Mismatch(String),
    Nondeterministic(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NotFound(_) => code::NOT_FOUND,
            CliError::Parse { .. } | CliError::Validation { .. } => code::VALIDATION,
            CliError::Protocol(_) => code::PROTOCOL,
            CliError::Runtime(_) | CliError::Io(_) => code::RUNTIME,
            CliError::Mismatch(_) => code::MISMATCH,
            CliError::Nondeterministic(_) => code::NONDETERMINISTIC,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::NotFound(p) => write!(f, "{}: no such scenario file", p.display()),
            CliError::Parse { path, message } => write!(f, "{}: {message}", path.display()),
            CliError::Validation { path, line: Some(l), message } => write!(f, "{}:{l}: {message}", path.display()),
            CliError::Validation { path, line: None, message } => write!(f, "{}: {message}", path.display()),
            CliError::Protocol(e) => write!(f, "protocol error: {e}"),
            CliError::Runtime(e) => write!(f, "runtime error: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Mismatch(m) => write!(f, "reports differ: {m}"),
            CliError::Nondeterministic(m) => write!(f, "repeat run differs: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<PifError> for CliError {
    fn from(e: PifError) -> Self {
        use PifError::*;
        match e {
            EmptySignal(_)
            | NoDecay
            | WindowOutOfRange { .. }
            | OutOfWindowEnergy { .. }
            | InitialCavityOccupied { .. }
            | DeconvolutionBlowUp(_)
            | MissingSnapshot(_) => CliError::Protocol(e),
            Io(m) => CliError::Io(m),
            other => CliError::Runtime(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
