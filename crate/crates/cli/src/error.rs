use serde::Serialize;
use serde_json::json;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Issue {
    pub field: String,
    pub reason: String,
}

impl Issue {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration ({} issue(s))", .0.len())]
    Config(Vec<Issue>),

    #[error("{message}")]
    Runtime {
        message: String,
        failed_replications: Vec<usize>,
    },
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config(vec![Issue::new(field, reason)])
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError::Runtime {
            message: message.into(),
            failed_replications: Vec::new(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime { .. } => 3,
        }
    }

    /// Machine-readable error object written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Config(issues) => json!({
                "error": { "kind": "config", "message": self.to_string(), "issues": issues }
            }),
            CliError::Runtime {
                message,
                failed_replications,
            } => json!({
                "error": { "kind": "runtime", "message": message, "failed_replications": failed_replications }
            }),
        }
    }
}

/// Library errors caused by bad inputs are configuration errors; the rest
/// happened while computing.
impl From<artkit::Error> for CliError {
    fn from(e: artkit::Error) -> Self {
        use artkit::Error as E;
        match &e {
            E::InvalidParameter { field, reason } => CliError::config(format!("params.{field}"), reason.clone()),
            E::DomainMismatch(_) | E::PolicyMismatch(_) | E::Dataset(_) | E::ForeignHistory { .. } => {
                CliError::config("params", e.to_string())
            }
            _ => CliError::runtime(e.to_string()),
        }
    }
}
