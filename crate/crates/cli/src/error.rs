//! Error classes and their exit codes.

use serde_json::json;
use storedlight::protocols::FitError;
use storedlight::{ConfigError, ProtocolError};

/// Exit 1: the request or its inputs are invalid. Exit 2: the run itself failed.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Validation(Vec<String>),
    Infeasible(String),
    Input(String),
    Solver(String),
    Fit(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config(_) | Self::Validation(_) | Self::Infeasible(_) | Self::Input(_) => 1,
            Self::Solver(_) | Self::Fit(_) | Self::Io(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Usage(_) => "usage",
            Self::Config(_) => "config",
            Self::Validation(_) => "validation",
            Self::Infeasible(_) => "infeasible",
            Self::Input(_) => "input",
            Self::Solver(_) => "solver",
            Self::Fit(_) => "fit",
            Self::Io(_) => "io",
        }
    }

    fn message(&self) -> String {
        match self {
            Self::Validation(v) => format!("invalid configuration: {}", v.join("; ")),
            Self::Usage(m)
            | Self::Config(m)
            | Self::Infeasible(m)
            | Self::Input(m)
            | Self::Solver(m)
            | Self::Fit(m)
            | Self::Io(m) => m.clone(),
        }
    }

    /// One-line machine-readable description.
    pub fn to_json(&self) -> String {
        let mut body = json!({
            "kind": self.kind(),
            "message": self.message(),
            "exit_code": self.exit_code(),
        });
        if let Self::Validation(v) = self {
            body["violations"] = json!(v);
        }
        json!({ "error": body }).to_string()
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        Self::Fit(e.to_string())
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        let msg = e.to_string();
        match e {
            ProtocolError::Config(c) => c.into(),
            ProtocolError::Infeasible(_) => Self::Infeasible(msg),
            ProtocolError::LeavesFiber(_) | ProtocolError::Invalid(_) => Self::Input(msg),
            ProtocolError::Fit(f) => f.into(),
            ProtocolError::Solver(_)
            | ProtocolError::Series(_)
            | ProtocolError::ZeroReference
            | ProtocolError::Calibration(_) => Self::Solver(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
