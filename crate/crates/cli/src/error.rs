use std::fmt;

use bss_core::solver::SolveError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Infeasible,
    Validation,
    Environment,
    Failure,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Infeasible => 2,
            ErrorKind::Validation => 3,
            ErrorKind::Environment => 4,
            ErrorKind::Failure => 1,
        }
    }
}

/// A failed stage, written to `error.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunError {
    pub kind: ErrorKind,
    pub stage: String,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

impl RunError {
    pub fn new(kind: ErrorKind, stage: impl Into<String>, message: impl fmt::Display) -> Self {
        Self { kind, stage: stage.into(), message: message.to_string(), details: vec![] }
    }

    pub fn with_details(mut self, details: Vec<String>) -> Self {
        self.details = details;
        self
    }

    pub fn validation(stage: impl Into<String>, message: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Validation, stage, message)
    }

    pub fn environment(stage: impl Into<String>, message: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Environment, stage, message)
    }

    pub fn io(stage: impl Into<String>, err: impl fmt::Display) -> Self {
        Self::environment(stage, err)
    }

    pub fn solve(stage: impl Into<String>, err: SolveError) -> Self {
        let kind = match &err {
            SolveError::InvalidGap(_) | SolveError::Unknown { .. } => ErrorKind::Validation,
            SolveError::TooLarge { .. } | SolveError::SolverMissing { .. } | SolveError::Io(_) | SolveError::Protocol { .. } => ErrorKind::Environment,
            SolveError::Numerical(_) => ErrorKind::Failure,
        };
        let details = match &err {
            SolveError::Protocol { output, .. } if !output.is_empty() => vec![output.clone()],
            _ => vec![],
        };
        Self::new(kind, stage, err).with_details(details)
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

impl std::error::Error for RunError {}
