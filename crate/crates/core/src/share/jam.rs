use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::record::SubmissionRecord;

/// A jam as submitted for creation. `id` is assigned by the store when
/// absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JamSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub theme: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub required_tag: String,
    #[serde(default)]
    pub diversifiers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_team_size: Option<u32>,
    /// Empty means any tool.
    #[serde(default)]
    pub allowed_tools: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jam {
    pub id: String,
    pub theme: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub required_tag: String,
    pub diversifiers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_team_size: Option<u32>,
    pub allowed_tools: Vec<String>,
    /// Accepted submission ids in acceptance order.
    #[serde(default)]
    pub submissions: Vec<String>,
}

impl JamSpec {
    /// Checks the jam invariants.
    pub fn check(&self) -> Result<(), String> {
        if self.start >= self.end {
            return Err("start must be before end".into());
        }
        if self.required_tag.len() < 2 || !self.required_tag.starts_with('#') {
            return Err(format!("required_tag '{}' must start with '#'", self.required_tag));
        }
        if self.max_team_size == Some(0) {
            return Err("max_team_size must be at least 1".into());
        }
        if self.theme.trim().is_empty() {
            return Err("theme is empty".into());
        }
        Ok(())
    }

    pub fn into_jam(self, id: String) -> Jam {
        Jam {
            id,
            theme: self.theme,
            start: self.start,
            end: self.end,
            required_tag: self.required_tag,
            diversifiers: self.diversifiers,
            max_team_size: self.max_team_size,
            allowed_tools: self.allowed_tools,
            submissions: Vec::new(),
        }
    }
}

/// The jam rules in the order they are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JamRule {
    Deadline,
    Tag,
    Tool,
    TeamSize,
    Diversifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SubmissionOutcome {
    Accepted,
    Rejected { rule: JamRule, reason: String },
}

impl SubmissionOutcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, SubmissionOutcome::Accepted)
    }
}

impl Jam {
    /// Closed interval: both `start` and `end` are inside the window.
    pub fn in_window(&self, at: DateTime<Utc>) -> bool {
        self.start <= at && at <= self.end
    }

    /// Applies the rules to a record; the first failing rule is reported.
    pub fn judge(&self, record: &SubmissionRecord) -> SubmissionOutcome {
        let reject = |rule, reason: String| SubmissionOutcome::Rejected { rule, reason };
        if !self.in_window(record.uploaded_at) {
            return reject(
                JamRule::Deadline,
                format!(
                    "uploaded at {} outside {} .. {}",
                    record.uploaded_at.to_rfc3339(),
                    self.start.to_rfc3339(),
                    self.end.to_rfc3339()
                ),
            );
        }
        if !record.has_tag(&self.required_tag) {
            return reject(JamRule::Tag, format!("missing tag {}", self.required_tag));
        }
        if !self.allowed_tools.is_empty()
            && !self
                .allowed_tools
                .iter()
                .any(|t| t.eq_ignore_ascii_case(&record.meta.tool))
        {
            return reject(JamRule::Tool, format!("tool '{}' is not allowed", record.meta.tool));
        }
        if let Some(max) = self.max_team_size {
            if record.meta.team_size > max {
                return reject(
                    JamRule::TeamSize,
                    format!("team of {} exceeds {max}", record.meta.team_size),
                );
            }
        }
        if let Some(unknown) = record
            .meta
            .diversifiers
            .iter()
            .find(|d| !self.diversifiers.contains(d))
        {
            return reject(JamRule::Diversifier, format!("unknown diversifier '{unknown}'"));
        }
        SubmissionOutcome::Accepted
    }
}
