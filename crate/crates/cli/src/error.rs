//! CLI failures and their machine-readable form.

use std::fmt;
use std::path::Path;

use randbill_core::Error;
use serde_json::json;

#[derive(Debug)]
pub enum CliError {
    /// Unrecognised flags or subcommands.
    Usage(String),
    /// Malformed flags, config file, or values outside the model's domain.
    Config(String),
    /// A library contract was violated.
    Library(Error),
    Io { path: String, message: String },
    /// `check` ran to completion but some invariant failed.
    CheckFailed(Vec<String>),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Library(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::CheckFailed(_) => "check_failed",
            CliError::Library(e) => match e {
                Error::SingularAngle(_) => "singular_angle",
                Error::OutOfRange { .. } => "out_of_range",
                Error::InvalidBaseAngle(_) => "invalid_base_angle",
                Error::Inadmissible { .. } => "inadmissible",
                Error::Truncated { .. } => "truncated",
                Error::Precondition(_) => "precondition",
                Error::ExcludedInput(_) => "excluded_input",
                Error::Numerical { .. } => "numerical",
                Error::Quadrature { .. } => "quadrature",
                Error::GridMismatch(_) => "grid_mismatch",
                Error::ZeroVector => "zero_vector",
            },
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut body = json!({
            "kind": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let CliError::CheckFailed(failed) = self {
            body["failed"] = json!(failed);
        }
        json!({ "error": body })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Config(m) => f.write_str(m),
            CliError::Library(e) => write!(f, "{e}"),
            CliError::Io { path, message } => write!(f, "{path}: {message}"),
            CliError::CheckFailed(failed) => write!(f, "checks failed: {}", failed.join(", ")),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Library(e)
    }
}
