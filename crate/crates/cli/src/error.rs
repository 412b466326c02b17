use std::fmt;
use std::path::Path;

use harmosc::io::FormatError;
use harmosc::{AnalysisError, DesignError, PolyError, SimError};
use serde::Serialize;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    /// Bad input: malformed files, invalid specs, unusable parameters.
    Validation,
    /// The computation ran but failed or did not meet its checks.
    Numerical,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Validation => EXIT_VALIDATION,
            Category::Numerical => EXIT_NUMERICAL,
        }
    }
}

/// Error reported by a command, serializable as the machine-readable error document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub category: Category,
    /// Variant name of the underlying error, e.g. `SingularSystem`.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn validation(kind: &str, message: impl Into<String>) -> Self {
        Self {
            category: Category::Validation,
            kind: kind.into(),
            stage: None,
            message: message.into(),
        }
    }

    pub fn numerical(kind: &str, message: impl Into<String>) -> Self {
        Self {
            category: Category::Numerical,
            kind: kind.into(),
            stage: None,
            message: message.into(),
        }
    }

    pub fn in_stage(mut self, stage: &str) -> Self {
        self.stage.get_or_insert_with(|| stage.to_string());
        self
    }

    pub fn exit_code(&self) -> i32 {
        self.category.exit_code()
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::validation("Io", format!("{}: {err}", path.display()))
    }

    /// `{"error": {...}}`
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.stage {
            Some(stage) => write!(f, "{stage}: {}: {}", self.kind, self.message),
            None => write!(f, "{}: {}", self.kind, self.message),
        }
    }
}

impl std::error::Error for CliError {}

impl From<PolyError> for CliError {
    fn from(e: PolyError) -> Self {
        let message = e.to_string();
        match e {
            PolyError::TooShort(_) => Self::validation("TooShort", message),
            PolyError::NonFinite { .. } => Self::validation("NonFinite", message),
            PolyError::DegenerateLeadingCoefficient { .. } => Self::validation("DegenerateLeadingCoefficient", message),
            PolyError::NoConvergence => Self::numerical("NoConvergence", message),
        }
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        let message = e.to_string();
        match e {
            DesignError::InvalidSpec(_) => Self::validation("InvalidSpec", message),
            DesignError::Underconstrained { .. } => Self::validation("Underconstrained", message),
            DesignError::Overconstrained { .. } => Self::validation("Overconstrained", message),
            DesignError::SingularSystem(_) => Self::validation("SingularSystem", message),
            DesignError::ZeroPivot { .. } => Self::validation("ZeroPivot", message),
            DesignError::Poly(p) => p.into(),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let message = e.to_string();
        match e {
            SimError::Poly(p) => p.into(),
            SimError::ResolutionViolation { .. } => Self::validation("ResolutionViolation", message),
            SimError::EventBeyondHorizon { .. } => Self::validation("EventBeyondHorizon", message),
            SimError::InvalidInput(_) => Self::validation("InvalidInput", message),
            SimError::NonFiniteState { .. } => Self::numerical("NonFiniteState", message),
            SimError::PoleProximity { .. } => Self::numerical("PoleProximity", message),
            SimError::NoConvergence => Self::numerical("NoConvergence", message),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        let message = e.to_string();
        match e {
            AnalysisError::TooShort { .. } => Self::validation("TooShort", message),
            AnalysisError::WindowTooLong { .. } => Self::validation("WindowTooLong", message),
            AnalysisError::WindowTooShort(_) => Self::validation("WindowTooShort", message),
            AnalysisError::InvalidParameter(_) => Self::validation("InvalidParameter", message),
            AnalysisError::NoOscillation => Self::numerical("NoOscillation", message),
            AnalysisError::NoTransient => Self::numerical("NoTransient", message),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        Self::validation("Format", e.to_string())
    }
}
