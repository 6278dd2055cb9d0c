use std::io;
use std::path::PathBuf;

use thiserror::Error;

use super::validate::Diagnostic;
use crate::formula::ParseError;

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("bundle has no project.json")]
    MissingManifest,
    #[error("malformed project.json at line {line}, column {column}: {message}")]
    MalformedJson {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unbalanced delimiter in {script} at brick {index}")]
    UnbalancedDelimiter { script: String, index: usize },
    #[error("unknown brick kind '{0}'")]
    UnknownBrickKind(String),
    #[error("malformed brick {index} in {script}: {message}")]
    MalformedBrick {
        script: String,
        index: usize,
        message: String,
    },
    #[error("bad formula at {location}: {source}")]
    Formula {
        location: String,
        source: ParseError,
    },
    #[error("asset '{0}' is referenced but missing from the bundle")]
    AssetMissing(String),
    #[error("duplicate name '{name}' in {scope}")]
    DuplicateName { scope: String, name: String },
    #[error("project is invalid ({} error(s))", count_errors(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("refusing to save a project with {} validation error(s)", count_errors(.0))]
    ValidationFailed(Vec<Diagnostic>),
    #[error("bad archive: {0}")]
    Archive(String),
    #[error("i/o failure at {}: {source}", path.display())]
    IoFailure { path: PathBuf, source: io::Error },
}

fn count_errors(diagnostics: &[Diagnostic]) -> usize {
    diagnostics.iter().filter(|d| d.is_error()).count()
}

impl ProjectError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ProjectError::MissingManifest => "missing_manifest",
            ProjectError::MalformedJson { .. } => "malformed_json",
            ProjectError::UnbalancedDelimiter { .. } => "unbalanced_delimiter",
            ProjectError::UnknownBrickKind(_) => "unknown_brick_kind",
            ProjectError::MalformedBrick { .. } => "malformed_brick",
            ProjectError::Formula { .. } => "formula_error",
            ProjectError::AssetMissing(_) => "asset_missing",
            ProjectError::DuplicateName { .. } => "duplicate_name",
            ProjectError::Invalid(_) => "invalid_project",
            ProjectError::ValidationFailed(_) => "validation_failed",
            ProjectError::Archive(_) => "bad_archive",
            ProjectError::IoFailure { .. } => "io_failure",
        }
    }

    /// Diagnostics carried by validation failures.
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            ProjectError::Invalid(d) | ProjectError::ValidationFailed(d) => d,
            _ => &[],
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        ProjectError::IoFailure {
            path: path.into(),
            source,
        }
    }
}
