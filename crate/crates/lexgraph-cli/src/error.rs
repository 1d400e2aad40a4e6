//! Exit-code policy: 0 success, 1 task failure, 2 input/validation failure.
//! Failures print one structured JSON object to stderr.

use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    /// Bad inputs or configuration (exit 2).
    Validation(anyhow::Error),
    /// The run itself failed (exit 1).
    Task(anyhow::Error),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorEnvelope<'a> {
    error: ErrorBody<'a>,
}

impl CliError {
    pub fn validation(err: anyhow::Error) -> Self {
        CliError::Validation(err)
    }

    pub fn task(err: anyhow::Error) -> Self {
        CliError::Task(err)
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Task(_) => 1,
        }
    }

    pub fn to_json(&self) -> String {
        let (kind, err) = match self {
            CliError::Validation(e) => ("validation", e),
            CliError::Task(e) => ("task", e),
        };
        serde_json::to_string(&ErrorEnvelope {
            error: ErrorBody {
                kind,
                message: format!("{err:#}"),
            },
        })
        .unwrap_or_else(|_| format!("{{\"error\":{{\"kind\":\"{kind}\"}}}}"))
    }
}
