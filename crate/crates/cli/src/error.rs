use std::fmt;
use std::path::Path;

use brickjam_core::analytics::AnalyticsError;
use brickjam_core::backpack::BackpackError;
use brickjam_core::project::{Diagnostic, ProjectError};
use brickjam_core::runtime::{RunError, TraceError};
use brickjam_core::share::ShareError;
use serde::Serialize;

/// Exit status for domain failures.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status for usage errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Serialize)]
pub struct CliError {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
    #[serde(skip)]
    pub usage: bool,
}

impl CliError {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        CliError {
            code: code.into(),
            message: message.into(),
            diagnostics: Vec::new(),
            usage: false,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            usage: true,
            ..CliError::new("usage", message)
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::new("io_failure", format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        if self.usage {
            EXIT_USAGE
        } else {
            EXIT_FAILURE
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)?;
        for d in &self.diagnostics {
            write!(f, "\n  {d}")?;
        }
        Ok(())
    }
}

impl From<ProjectError> for CliError {
    fn from(e: ProjectError) -> Self {
        CliError {
            diagnostics: e.diagnostics().to_vec(),
            ..CliError::new(e.code(), e.to_string())
        }
    }
}

impl From<BackpackError> for CliError {
    fn from(e: BackpackError) -> Self {
        let diagnostics = match &e {
            BackpackError::InvalidItem(d) => d.clone(),
            BackpackError::Project(p) => p.diagnostics().to_vec(),
            _ => Vec::new(),
        };
        CliError {
            diagnostics,
            ..CliError::new(e.code(), e.to_string())
        }
    }
}

impl From<ShareError> for CliError {
    fn from(e: ShareError) -> Self {
        let diagnostics = match &e {
            ShareError::InvalidBundle { diagnostics, .. } => diagnostics.clone(),
            _ => Vec::new(),
        };
        CliError {
            diagnostics,
            ..CliError::new(e.code(), e.to_string())
        }
    }
}

impl From<AnalyticsError> for CliError {
    fn from(e: AnalyticsError) -> Self {
        CliError::new(e.code(), e.to_string())
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        CliError::new(e.code(), e.to_string())
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        CliError::new("bad_trace", e.to_string())
    }
}
